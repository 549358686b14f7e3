//! Reference semantics: a direct interpreter over the untyped syntax tree.
//!
//! Shares nothing with the compiler beyond the parser. Offsets come from its
//! own declaration walk, values are plain `i32` with wrapping arithmetic.

use std::collections::HashMap;

use macrocell_core::lang::ast::{Ast, BinaryOp, ElemType, Expr, ScalarType, Stmt, UnaryOp, VarClass, VarRef, VarType};

fn scalar_size(s: ScalarType) -> usize {
    match s {
        ScalarType::Bool | ScalarType::Int8 => 1,
        ScalarType::Int16 => 2,
        ScalarType::Int32 => 4,
    }
}

fn elem_size(e: &ElemType) -> usize {
    match e {
        ElemType::Scalar(s) => scalar_size(*s),
        ElemType::Struct(st) => st.fields.iter().map(|f| scalar_size(f.ty)).sum(),
    }
}

fn var_size(t: &VarType) -> usize {
    match t {
        VarType::Scalar(s) => scalar_size(*s),
        VarType::Struct(st) => elem_size(&ElemType::Struct(st.clone())),
        VarType::Array { elem, lo, hi } => (*hi as i64 - *lo as i64 + 1) as usize * elem_size(elem),
    }
}

/// `(external bytes, local bytes)` by summing packed sizes in declaration order.
pub fn region_sizes(ast: &Ast) -> (usize, usize) {
    let mut sizes = (0, 0);
    for d in &ast.declarations {
        match d.class {
            VarClass::External => sizes.0 += var_size(&d.ty),
            VarClass::Local => sizes.1 += var_size(&d.ty),
        }
    }
    sizes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleTrap {
    DivByZero,
    IndexOutOfBounds,
}

impl OracleTrap {
    pub fn code(self) -> &'static str {
        match self {
            OracleTrap::DivByZero => "DIV_BY_ZERO",
            OracleTrap::IndexOutOfBounds => "INDEX_OUT_OF_BOUNDS",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOutcome {
    pub externals: Vec<u8>,
    pub locals: Vec<u8>,
    pub trap: Option<OracleTrap>,
}

struct Var<'a> {
    class: VarClass,
    offset: usize,
    ty: &'a VarType,
}

struct Interp<'a> {
    vars: HashMap<&'a str, Var<'a>>,
    ext: Vec<u8>,
    loc: Vec<u8>,
}

type R<T> = Result<T, OracleTrap>;

impl<'a> Interp<'a> {
    fn new(ast: &'a Ast, ext: Vec<u8>, loc: Vec<u8>) -> Self {
        let mut vars = HashMap::new();
        let (mut e, mut l) = (0, 0);
        for d in &ast.declarations {
            let cursor = match d.class {
                VarClass::External => &mut e,
                VarClass::Local => &mut l,
            };
            vars.insert(
                d.name.as_str(),
                Var {
                    class: d.class,
                    offset: *cursor,
                    ty: &d.ty,
                },
            );
            *cursor += var_size(&d.ty);
        }
        assert_eq!((e, l), (ext.len(), loc.len()), "initial regions sized to the program");
        Interp { vars, ext, loc }
    }

    /// Resolves a reference to (class, byte offset, scalar type).
    fn locate(&mut self, r: &VarRef) -> R<(VarClass, usize, ScalarType)> {
        let (class, base, ty) = {
            let v = &self.vars[r.name.as_str()];
            (v.class, v.offset, v.ty)
        };
        let (elem, elem_off) = match (ty, &r.index) {
            (VarType::Array { elem, lo, hi }, Some(ix)) => {
                let k = self.eval(ix)?;
                if k < *lo || k > *hi {
                    return Err(OracleTrap::IndexOutOfBounds);
                }
                (elem.clone(), (k as i64 - *lo as i64) as usize * elem_size(elem))
            }
            (VarType::Scalar(s), None) => (ElemType::Scalar(*s), 0),
            (VarType::Struct(st), None) => (ElemType::Struct(st.clone()), 0),
            _ => panic!("oracle given an ill-typed reference"),
        };
        let (field_off, scalar) = match (&elem, &r.field) {
            (ElemType::Scalar(s), None) => (0, *s),
            (ElemType::Struct(st), Some(f)) => {
                let mut off = 0;
                let mut found = None;
                for fd in &st.fields {
                    if &fd.name == f {
                        found = Some(fd.ty);
                        break;
                    }
                    off += scalar_size(fd.ty);
                }
                (off, found.expect("field exists"))
            }
            _ => panic!("oracle given an ill-typed reference"),
        };
        Ok((class, base + elem_off + field_off, scalar))
    }

    fn bytes(&mut self, class: VarClass) -> &mut Vec<u8> {
        match class {
            VarClass::External => &mut self.ext,
            VarClass::Local => &mut self.loc,
        }
    }

    fn read(&mut self, class: VarClass, off: usize, s: ScalarType) -> i32 {
        let b = self.bytes(class);
        match scalar_size(s) {
            1 => b[off] as i8 as i32,
            2 => i16::from_le_bytes([b[off], b[off + 1]]) as i32,
            _ => i32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]]),
        }
    }

    fn write(&mut self, class: VarClass, off: usize, s: ScalarType, v: i32) {
        let n = scalar_size(s);
        self.bytes(class)[off..off + n].copy_from_slice(&v.to_le_bytes()[..n]);
    }

    fn is_bool(&self, e: &Expr) -> bool {
        match e {
            Expr::Bool(..) => true,
            Expr::Int(..) => false,
            Expr::Unary(op, ..) => *op == UnaryOp::Not,
            Expr::Binary(op, ..) => !matches!(op, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div),
            Expr::Var(r) => {
                let scalar = match self.vars[r.name.as_str()].ty {
                    VarType::Scalar(s) => Some(*s),
                    VarType::Array {
                        elem: ElemType::Scalar(s),
                        ..
                    } => Some(*s),
                    VarType::Struct(st)
                    | VarType::Array {
                        elem: ElemType::Struct(st),
                        ..
                    } => st
                        .fields
                        .iter()
                        .find(|f| Some(&f.name) == r.field.as_ref())
                        .map(|f| f.ty),
                };
                scalar == Some(ScalarType::Bool)
            }
        }
    }

    fn eval(&mut self, e: &Expr) -> R<i32> {
        Ok(match e {
            Expr::Int(v, _) => *v,
            Expr::Bool(b, _) => *b as i32,
            Expr::Var(r) => {
                let (c, off, s) = self.locate(r)?;
                self.read(c, off, s)
            }
            Expr::Unary(UnaryOp::Neg, x, _) => self.eval(x)?.wrapping_neg(),
            Expr::Unary(UnaryOp::Not, x, _) => (self.eval(x)? == 0) as i32,
            Expr::Binary(op, l, r, _) => {
                let truth = self.is_bool(l);
                let a = self.eval(l)?;
                let b = self.eval(r)?;
                match op {
                    BinaryOp::Add => a.wrapping_add(b),
                    BinaryOp::Sub => a.wrapping_sub(b),
                    BinaryOp::Mul => a.wrapping_mul(b),
                    BinaryOp::Div => {
                        if b == 0 {
                            return Err(OracleTrap::DivByZero);
                        }
                        a.wrapping_div(b)
                    }
                    BinaryOp::And => (a != 0 && b != 0) as i32,
                    BinaryOp::Or => (a != 0 || b != 0) as i32,
                    BinaryOp::Eq if truth => ((a != 0) == (b != 0)) as i32,
                    BinaryOp::Ne if truth => ((a != 0) != (b != 0)) as i32,
                    BinaryOp::Eq => (a == b) as i32,
                    BinaryOp::Ne => (a != b) as i32,
                    BinaryOp::Lt => (a < b) as i32,
                    BinaryOp::Le => (a <= b) as i32,
                    BinaryOp::Gt => (a > b) as i32,
                    BinaryOp::Ge => (a >= b) as i32,
                }
            }
        })
    }

    fn exec(&mut self, s: &Stmt) -> R<()> {
        match s {
            Stmt::Assign { target, value, .. } => {
                let v = self.eval(value)?;
                let (c, off, ty) = self.locate(target)?;
                self.write(c, off, ty, v);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                ..
            } => {
                if self.eval(cond)? != 0 {
                    self.exec(then_branch)?;
                } else if let Some(e) = else_branch {
                    self.exec(e)?;
                }
            }
            Stmt::For {
                var, start, end, body, ..
            } => {
                let start = start.as_int_literal().expect("literal bound");
                let end = end.as_int_literal().expect("literal bound");
                let (off, ty) = {
                    let v = &self.vars[var.as_str()];
                    match v.ty {
                        VarType::Scalar(s) => (v.offset, *s),
                        _ => panic!("loop variable must be scalar"),
                    }
                };
                self.write(VarClass::Local, off, ty, start);
                while self.read(VarClass::Local, off, ty) <= end {
                    self.exec(body)?;
                    let next = self.read(VarClass::Local, off, ty).wrapping_add(1);
                    self.write(VarClass::Local, off, ty, next);
                }
            }
            Stmt::Block(stmts, _) => {
                for s in stmts {
                    self.exec(s)?;
                }
            }
        }
        Ok(())
    }
}

/// Runs `ast` once from the given region contents.
pub fn run(ast: &Ast, externals: &[u8], locals: &[u8]) -> OracleOutcome {
    let mut it = Interp::new(ast, externals.to_vec(), locals.to_vec());
    let mut trap = None;
    for s in &ast.statements {
        if let Err(t) = it.exec(s) {
            trap = Some(t);
            break;
        }
    }
    OracleOutcome {
        externals: it.ext,
        locals: it.loc,
        trap,
    }
}
