//! Recursive-descent parser.
//!
//! ```text
//! program  := extDecl* localDecl* stmt*
//! extDecl  := type IDENT bounds? ';'
//! localDecl:= 'local' type IDENT bounds? ';'
//! type     := scalar | 'struct' '{' (scalar IDENT ';')+ '}'
//! bounds   := '[' int '..' int ']'
//! stmt     := varref '=' expr ';'
//!           | 'if' '(' expr ')' stmt ('else' stmt)?
//!           | 'for' '(' IDENT '=' expr ';' IDENT '<=' expr ';' IDENT '++' ')' stmt
//!           | '{' stmt* '}'
//! varref   := IDENT ('[' expr ']')? ('.' IDENT)?
//! ```

use super::ast::*;
use super::lexer::{Keyword, Token, TokenKind};
use super::ParseError;

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

pub fn parse(tokens: &[Token]) -> Result<Ast, ParseError> {
    let mut p = Parser { tokens, pos: 0 };
    p.program()
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn span(&self) -> Span {
        match self.tokens.get(self.pos).or(self.tokens.last()) {
            Some(t) if self.pos < self.tokens.len() => Span {
                line: t.line,
                column: t.column,
            },
            Some(t) => Span {
                line: t.line,
                column: t.column + t.lexeme.chars().count() as u32,
            },
            None => Span { line: 1, column: 1 },
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let span = self.span();
        ParseError {
            line: span.line,
            column: span.column,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: match self.peek() {
                Some(k) => k.to_string(),
                None => "end of input".to_string(),
            },
        }
    }

    fn is_symbol(&self, sym: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Punct(s) | TokenKind::Operator(s)) if *s == sym)
    }

    fn eat_symbol(&mut self, sym: &str) -> bool {
        if self.is_symbol(sym) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, sym: &str) -> PResult<()> {
        if self.eat_symbol(sym) {
            Ok(())
        } else {
            Err(self.error(&[&format!("`{sym}`")]))
        }
    }

    fn eat_keyword(&mut self, kw: Keyword) -> bool {
        if self.peek() == Some(&TokenKind::Keyword(kw)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(TokenKind::Identifier(name)) => {
                self.pos += 1;
                Ok(name.clone())
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn scalar_type(&mut self) -> Option<ScalarType> {
        let ty = match self.peek()? {
            TokenKind::Keyword(Keyword::Bool) => ScalarType::Bool,
            TokenKind::Keyword(Keyword::Int8) => ScalarType::Int8,
            TokenKind::Keyword(Keyword::Int16) => ScalarType::Int16,
            TokenKind::Keyword(Keyword::Int32) => ScalarType::Int32,
            _ => return None,
        };
        self.pos += 1;
        Some(ty)
    }

    fn starts_decl(&self) -> bool {
        matches!(
            self.peek(),
            Some(TokenKind::Keyword(
                Keyword::Local | Keyword::Bool | Keyword::Int8 | Keyword::Int16 | Keyword::Int32 | Keyword::Struct
            ))
        )
    }

    fn program(&mut self) -> PResult<Ast> {
        let mut ast = Ast::default();
        let mut seen_local = false;
        while self.starts_decl() {
            let span = self.span();
            let class = if self.eat_keyword(Keyword::Local) {
                seen_local = true;
                VarClass::Local
            } else if seen_local {
                return Err(self.error(&["`local`", "statement"]));
            } else {
                VarClass::External
            };
            let decl_order = ast.declarations.len();
            ast.declarations.push(self.declaration(class, decl_order, span)?);
        }
        while self.peek().is_some() {
            ast.statements.push(self.statement()?);
        }
        Ok(ast)
    }

    fn declaration(&mut self, class: VarClass, decl_order: usize, span: Span) -> PResult<VarDecl> {
        let elem = if self.eat_keyword(Keyword::Struct) {
            self.expect_symbol("{")?;
            let mut fields = Vec::new();
            loop {
                let fspan = self.span();
                let Some(ty) = self.scalar_type() else {
                    if !fields.is_empty() && self.eat_symbol("}") {
                        break;
                    }
                    return Err(self.error(&["bool", "int8", "int16", "int32"]));
                };
                let name = self.expect_ident()?;
                self.expect_symbol(";")?;
                fields.push(StructField { name, ty, span: fspan });
            }
            ElemType::Struct(StructType { fields })
        } else if let Some(ty) = self.scalar_type() {
            ElemType::Scalar(ty)
        } else {
            return Err(self.error(&["bool", "int8", "int16", "int32", "struct"]));
        };

        let name = self.expect_ident()?;
        let ty = if self.eat_symbol("[") {
            let lo = self.bound()?;
            self.expect_symbol("..")?;
            let hi = self.bound()?;
            self.expect_symbol("]")?;
            VarType::Array { elem, lo, hi }
        } else {
            match elem {
                ElemType::Scalar(s) => VarType::Scalar(s),
                ElemType::Struct(s) => VarType::Struct(s),
            }
        };
        self.expect_symbol(";")?;
        Ok(VarDecl {
            name,
            class,
            ty,
            decl_order,
            span,
        })
    }

    fn bound(&mut self) -> PResult<i32> {
        let negative = self.eat_symbol("-");
        match self.peek() {
            Some(TokenKind::IntLiteral(v)) => {
                let v = *v as i64;
                let v = if negative { -v } else { v };
                let v = i32::try_from(v).map_err(|_| self.error(&["integer in 32-bit range"]))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error(&["integer literal"])),
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let span = self.span();
        match self.peek() {
            Some(TokenKind::Punct("{")) => {
                self.pos += 1;
                let mut body = Vec::new();
                while !self.eat_symbol("}") {
                    if self.peek().is_none() {
                        return Err(self.error(&["`}`"]));
                    }
                    body.push(self.statement()?);
                }
                Ok(Stmt::Block(body, span))
            }
            Some(TokenKind::Keyword(Keyword::If)) => {
                self.pos += 1;
                self.expect_symbol("(")?;
                let cond = self.expr()?;
                self.expect_symbol(")")?;
                let then_branch = Box::new(self.statement()?);
                let else_branch = if self.eat_keyword(Keyword::Else) {
                    Some(Box::new(self.statement()?))
                } else {
                    None
                };
                Ok(Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                    span,
                })
            }
            Some(TokenKind::Keyword(Keyword::For)) => {
                self.pos += 1;
                self.expect_symbol("(")?;
                let var = self.expect_ident()?;
                self.expect_symbol("=")?;
                let start = self.expr()?;
                self.expect_symbol(";")?;
                self.expect_same_ident(&var)?;
                self.expect_symbol("<=")?;
                let end = self.expr()?;
                self.expect_symbol(";")?;
                self.expect_same_ident(&var)?;
                self.expect_symbol("++")?;
                self.expect_symbol(")")?;
                let body = Box::new(self.statement()?);
                Ok(Stmt::For {
                    var,
                    start,
                    end,
                    body,
                    span,
                })
            }
            Some(TokenKind::Identifier(_)) => {
                let target = self.var_ref()?;
                self.expect_symbol("=")?;
                let value = self.expr()?;
                self.expect_symbol(";")?;
                Ok(Stmt::Assign { target, value, span })
            }
            _ => Err(self.error(&["statement"])),
        }
    }

    fn expect_same_ident(&mut self, var: &str) -> PResult<()> {
        match self.peek() {
            Some(TokenKind::Identifier(name)) if name == var => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&[&format!("loop variable `{var}`")])),
        }
    }

    fn var_ref(&mut self) -> PResult<VarRef> {
        let span = self.span();
        let name = self.expect_ident()?;
        let index = if self.eat_symbol("[") {
            let e = self.expr()?;
            self.expect_symbol("]")?;
            Some(Box::new(e))
        } else {
            None
        };
        let field = if self.eat_symbol(".") {
            Some(self.expect_ident()?)
        } else {
            None
        };
        Ok(VarRef {
            name,
            index,
            field,
            span,
        })
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let op = match self.peek()? {
            TokenKind::Operator(s) => *s,
            _ => return None,
        };
        Some(match op {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "&&" => BinaryOp::And,
            "||" => BinaryOp::Or,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            _ => return None,
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.expr_prec(1)
    }

    // Precedence climbing, all binary operators left-associative.
    fn expr_prec(&mut self, min: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            let prec = op.precedence();
            if prec < min {
                break;
            }
            let span = self.span();
            self.pos += 1;
            let rhs = self.expr_prec(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs), span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let span = self.span();
        if self.eat_symbol("-") {
            // A minus directly on a literal is part of the literal.
            if let Some(TokenKind::IntLiteral(v)) = self.peek() {
                let v = -(*v as i64);
                self.pos += 1;
                return Ok(Expr::Int(v as i32, span));
            }
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.unary()?), span));
        }
        if self.eat_symbol("!") {
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(self.unary()?), span));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek() {
            Some(TokenKind::IntLiteral(v)) => {
                let v = i32::try_from(*v).map_err(|_| self.error(&["integer in 32-bit range"]))?;
                self.pos += 1;
                Ok(Expr::Int(v, span))
            }
            Some(TokenKind::BoolLiteral(b)) => {
                let b = *b;
                self.pos += 1;
                Ok(Expr::Bool(b, span))
            }
            Some(TokenKind::Identifier(_)) => Ok(Expr::Var(self.var_ref()?)),
            Some(TokenKind::Punct("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_symbol(")")?;
                Ok(e)
            }
            _ => Err(self.error(&["expression"])),
        }
    }
}
