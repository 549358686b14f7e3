//! Adaptation language front end: lexer, parser, printer and semantic checks.
//!
//! The language is deliberately small. There are no pointers, no calls and
//! no unbounded loops, so every accepted program has a statically computable
//! worst-case execution time and touches only its declared variables.

pub mod analyze;
pub mod ast;
pub mod lexer;
pub mod parser;
mod print;

use thiserror::Error;

pub use analyze::{analyze, Index, Place, Symbol, SymbolId, TExpr, TStmt, TypedProgram, ValueType};
pub use ast::{Ast, BinaryOp, ElemType, ScalarType, StructType, UnaryOp, VarClass, VarDecl, VarType};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;

/// The Rack Manager decision rule used throughout tests and examples.
pub const RACK_MANAGER_SOURCE: &str = include_str!("../../fixtures/rack_manager.adp");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct LexError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticErrorKind {
    #[error("undeclared identifier `{0}`")]
    UndeclaredIdentifier(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("constant index {index} out of bounds for `{name}[{lo}..{hi}]`")]
    ConstantIndexOutOfBounds { name: String, index: i32, lo: i32, hi: i32 },
    #[error("loop bounds must be integer literals")]
    NonLiteralLoopBound,
    #[error("duplicate declaration of `{0}`")]
    DuplicateDeclaration(String),
    #[error("loop variable `{0}` must be a local integer scalar")]
    LoopVarNotLocalScalar(String),
    #[error("loop variable `{0}` is assigned inside its loop")]
    LoopVarAssigned(String),
    #[error("loop bounds overflow the range of `{var}` ({ty})")]
    LoopBoundOutOfRange { var: String, ty: &'static str },
    #[error("array `{name}` has empty range {lo}..{hi}")]
    EmptyArrayRange { name: String, lo: i32, hi: i32 },
    #[error("`{name}` has no field `{field}`")]
    UnknownField { name: String, field: String },
    #[error("{0:?} variables exceed the addressable region size")]
    RegionTooLarge(VarClass),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct SemanticError {
    pub line: u32,
    pub column: u32,
    pub kind: SemanticErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("lex error at {0}")]
    Lex(#[from] LexError),
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("semantic error at {0}")]
    Semantic(#[from] SemanticError),
}

impl FrontendError {
    pub fn position(&self) -> (u32, u32) {
        match self {
            FrontendError::Lex(e) => (e.line, e.column),
            FrontendError::Parse(e) => (e.line, e.column),
            FrontendError::Semantic(e) => (e.line, e.column),
        }
    }

    /// `file:line:col: error: message`
    pub fn diagnostic(&self, file: &str) -> String {
        let (line, column) = self.position();
        let message = match self {
            FrontendError::Lex(e) => e.message.clone(),
            FrontendError::Parse(e) => format!("expected {}, found {}", e.expected.join(" or "), e.found),
            FrontendError::Semantic(e) => e.kind.to_string(),
        };
        format!("{file}:{line}:{column}: error: {message}")
    }
}

pub fn parse_source(source: &str) -> Result<Ast, FrontendError> {
    Ok(parse(&tokenize(source)?)?)
}

/// Tokenize, parse and analyze in one go.
pub fn check_source(source: &str) -> Result<TypedProgram, FrontendError> {
    Ok(analyze(&parse_source(source)?)?)
}
