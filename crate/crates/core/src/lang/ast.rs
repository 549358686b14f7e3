//! Untyped syntax tree produced by the parser.

/// Source position of a node (1-based).
///
/// Positions are metadata only: two spans always compare equal, so deriving
/// `PartialEq` on nodes yields structural equality.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub line: u32,
    pub column: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalarType {
    Bool,
    Int8,
    Int16,
    Int32,
}

impl ScalarType {
    pub fn byte_size(self) -> u32 {
        match self {
            ScalarType::Bool | ScalarType::Int8 => 1,
            ScalarType::Int16 => 2,
            ScalarType::Int32 => 4,
        }
    }

    pub fn is_int(self) -> bool {
        !matches!(self, ScalarType::Bool)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ScalarType::Bool => "bool",
            ScalarType::Int8 => "int8",
            ScalarType::Int16 => "int16",
            ScalarType::Int32 => "int32",
        }
    }

    /// Inclusive value range representable by the type.
    pub fn value_range(self) -> (i64, i64) {
        match self {
            ScalarType::Bool => (0, 1),
            ScalarType::Int8 => (i8::MIN as i64, i8::MAX as i64),
            ScalarType::Int16 => (i16::MIN as i64, i16::MAX as i64),
            ScalarType::Int32 => (i32::MIN as i64, i32::MAX as i64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructField {
    pub name: String,
    pub ty: ScalarType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructType {
    pub fields: Vec<StructField>,
}

impl StructType {
    pub fn byte_size(&self) -> u32 {
        self.fields.iter().map(|f| f.ty.byte_size()).sum()
    }

    /// Packed byte offset and type of a field.
    pub fn field(&self, name: &str) -> Option<(usize, u32, ScalarType)> {
        let mut offset = 0;
        for (i, f) in self.fields.iter().enumerate() {
            if f.name == name {
                return Some((i, offset, f.ty));
            }
            offset += f.ty.byte_size();
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ElemType {
    Scalar(ScalarType),
    Struct(StructType),
}

impl ElemType {
    pub fn byte_size(&self) -> u32 {
        match self {
            ElemType::Scalar(s) => s.byte_size(),
            ElemType::Struct(s) => s.byte_size(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VarType {
    Scalar(ScalarType),
    Struct(StructType),
    Array { elem: ElemType, lo: i32, hi: i32 },
}

impl VarType {
    /// Packed size in bytes; `None` when it does not fit in 64 bits.
    pub fn byte_size(&self) -> Option<u64> {
        match self {
            VarType::Scalar(s) => Some(s.byte_size() as u64),
            VarType::Struct(s) => Some(s.byte_size() as u64),
            VarType::Array { elem, lo, hi } => {
                let count = (*hi as i64 - *lo as i64 + 1).max(0) as u64;
                count.checked_mul(elem.byte_size() as u64)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarClass {
    External,
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub class: VarClass,
    pub ty: VarType,
    pub decl_order: usize,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div => 6,
        }
    }
}

/// `name`, `name.field`, `name[index]` or `name[index].field`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarRef {
    pub name: String,
    pub index: Option<Box<Expr>>,
    pub field: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i32, Span),
    Bool(bool, Span),
    Var(VarRef),
    Unary(UnaryOp, Box<Expr>, Span),
    Binary(BinaryOp, Box<Expr>, Box<Expr>, Span),
}

impl Expr {
    pub fn span(&self) -> Span {
        match self {
            Expr::Int(_, s) | Expr::Bool(_, s) | Expr::Unary(_, _, s) | Expr::Binary(_, _, _, s) => *s,
            Expr::Var(v) => v.span,
        }
    }

    /// The value of an integer literal, including a negated one.
    pub fn as_int_literal(&self) -> Option<i32> {
        match self {
            Expr::Int(v, _) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Assign {
        target: VarRef,
        value: Expr,
        span: Span,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
        span: Span,
    },
    For {
        var: String,
        start: Expr,
        end: Expr,
        body: Box<Stmt>,
        span: Span,
    },
    Block(Vec<Stmt>, Span),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Ast {
    pub declarations: Vec<VarDecl>,
    pub statements: Vec<Stmt>,
}
