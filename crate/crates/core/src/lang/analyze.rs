//! Name resolution, type checking and the static safety gates.
//!
//! An accepted program has only resolved names, only bounded loops with an
//! exact trip count, and every array access is either proven in range at
//! compile time or carries its declared bounds for a runtime check.

use std::collections::HashMap;

use super::ast::*;
use super::{SemanticError, SemanticErrorKind};

pub type SymbolId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub class: VarClass,
    pub ty: VarType,
    pub decl_order: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Index {
    /// Literal index, already checked against the declared range.
    Static(i32),
    /// Computed index; needs a runtime bounds check against `lo..=hi`.
    Dynamic { expr: Box<TExpr>, lo: i32, hi: i32 },
}

/// A resolved scalar memory location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place {
    pub var: SymbolId,
    pub index: Option<Index>,
    /// Byte offset of the selected struct field inside the element.
    pub field_offset: u32,
    pub scalar: ScalarType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Bool,
    Int,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TExpr {
    Int(i32),
    Bool(bool),
    Load(Place),
    Unary(UnaryOp, Box<TExpr>),
    Binary {
        op: BinaryOp,
        lhs: Box<TExpr>,
        rhs: Box<TExpr>,
        operand_ty: ValueType,
    },
}

impl TExpr {
    pub fn ty(&self) -> ValueType {
        match self {
            TExpr::Int(_) => ValueType::Int,
            TExpr::Bool(_) => ValueType::Bool,
            TExpr::Load(p) => value_type(p.scalar),
            TExpr::Unary(UnaryOp::Neg, _) => ValueType::Int,
            TExpr::Unary(UnaryOp::Not, _) => ValueType::Bool,
            TExpr::Binary { op, .. } => match op {
                BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => ValueType::Int,
                _ => ValueType::Bool,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TStmt {
    Assign {
        place: Place,
        value: TExpr,
    },
    If {
        cond: TExpr,
        then_branch: Box<TStmt>,
        else_branch: Option<Box<TStmt>>,
    },
    For {
        var: SymbolId,
        var_ty: ScalarType,
        start: i32,
        end: i32,
        trip_count: u64,
        body: Box<TStmt>,
    },
    Block(Vec<TStmt>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedProgram {
    pub ast: Ast,
    pub symbols: Vec<Symbol>,
    pub body: Vec<TStmt>,
}

impl TypedProgram {
    pub fn symbol(&self, name: &str) -> Option<(SymbolId, &Symbol)> {
        self.symbols.iter().enumerate().find(|(_, s)| s.name == name)
    }
}

fn value_type(s: ScalarType) -> ValueType {
    if s.is_int() {
        ValueType::Int
    } else {
        ValueType::Bool
    }
}

fn err(span: Span, kind: SemanticErrorKind) -> SemanticError {
    SemanticError {
        line: span.line,
        column: span.column,
        kind,
    }
}

fn mismatch(span: Span, msg: impl Into<String>) -> SemanticError {
    err(span, SemanticErrorKind::TypeMismatch(msg.into()))
}

struct Checker<'a> {
    symbols: Vec<Symbol>,
    by_name: HashMap<&'a str, SymbolId>,
    active_loops: Vec<SymbolId>,
}

pub fn analyze(ast: &Ast) -> Result<TypedProgram, SemanticError> {
    let mut ck = Checker {
        symbols: Vec::with_capacity(ast.declarations.len()),
        by_name: HashMap::new(),
        active_loops: Vec::new(),
    };
    let mut region_totals = [0u64; 2];

    for decl in &ast.declarations {
        if ck.by_name.contains_key(decl.name.as_str()) {
            return Err(err(
                decl.span,
                SemanticErrorKind::DuplicateDeclaration(decl.name.clone()),
            ));
        }
        let fields = match &decl.ty {
            VarType::Struct(s)
            | VarType::Array {
                elem: ElemType::Struct(s),
                ..
            } => Some(&s.fields),
            _ => None,
        };
        if let Some(fields) = fields {
            for (i, f) in fields.iter().enumerate() {
                if fields[..i].iter().any(|g| g.name == f.name) {
                    return Err(err(f.span, SemanticErrorKind::DuplicateDeclaration(f.name.clone())));
                }
            }
        }
        if let VarType::Array { lo, hi, .. } = decl.ty {
            if lo > hi {
                return Err(err(
                    decl.span,
                    SemanticErrorKind::EmptyArrayRange {
                        name: decl.name.clone(),
                        lo,
                        hi,
                    },
                ));
            }
        }
        let slot = &mut region_totals[(decl.class == VarClass::Local) as usize];
        *slot = decl
            .ty
            .byte_size()
            .and_then(|s| slot.checked_add(s))
            .filter(|&t| t <= i32::MAX as u64)
            .ok_or_else(|| err(decl.span, SemanticErrorKind::RegionTooLarge(decl.class)))?;

        ck.by_name.insert(&decl.name, ck.symbols.len());
        ck.symbols.push(Symbol {
            name: decl.name.clone(),
            class: decl.class,
            ty: decl.ty.clone(),
            decl_order: decl.decl_order,
        });
    }

    let body = ast
        .statements
        .iter()
        .map(|s| ck.stmt(s))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(TypedProgram {
        ast: ast.clone(),
        symbols: ck.symbols,
        body,
    })
}

impl<'a> Checker<'a> {
    fn resolve(&self, name: &str, span: Span) -> Result<SymbolId, SemanticError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| err(span, SemanticErrorKind::UndeclaredIdentifier(name.to_string())))
    }

    fn place(&self, r: &VarRef) -> Result<Place, SemanticError> {
        let var = self.resolve(&r.name, r.span)?;
        let sym = &self.symbols[var];

        let (elem, index) = match (&sym.ty, &r.index) {
            (VarType::Array { elem, lo, hi }, Some(idx)) => {
                let index = match idx.as_int_literal() {
                    Some(k) if k < *lo || k > *hi => {
                        return Err(err(
                            idx.span(),
                            SemanticErrorKind::ConstantIndexOutOfBounds {
                                name: r.name.clone(),
                                index: k,
                                lo: *lo,
                                hi: *hi,
                            },
                        ))
                    }
                    Some(k) => Index::Static(k),
                    None => {
                        let expr = self.expr(idx)?;
                        if expr.ty() != ValueType::Int {
                            return Err(mismatch(idx.span(), "array index must be an integer"));
                        }
                        Index::Dynamic {
                            expr: Box::new(expr),
                            lo: *lo,
                            hi: *hi,
                        }
                    }
                };
                (elem.clone(), Some(index))
            }
            (VarType::Array { .. }, None) => {
                return Err(mismatch(r.span, format!("array `{}` must be indexed", r.name)))
            }
            (_, Some(_)) => return Err(mismatch(r.span, format!("`{}` is not an array", r.name))),
            (VarType::Scalar(s), None) => (ElemType::Scalar(*s), None),
            (VarType::Struct(s), None) => (ElemType::Struct(s.clone()), None),
        };

        let (field_offset, scalar) = match (&elem, &r.field) {
            (ElemType::Scalar(s), None) => (0, *s),
            (ElemType::Struct(st), Some(f)) => match st.field(f) {
                Some((_, off, ty)) => (off, ty),
                None => {
                    return Err(err(
                        r.span,
                        SemanticErrorKind::UnknownField {
                            name: r.name.clone(),
                            field: f.clone(),
                        },
                    ))
                }
            },
            (ElemType::Struct(_), None) => {
                return Err(mismatch(r.span, format!("`{}` is a struct; select a field", r.name)))
            }
            (ElemType::Scalar(_), Some(f)) => return Err(mismatch(r.span, format!("`{}` has no field `{f}`", r.name))),
        };

        Ok(Place {
            var,
            index,
            field_offset,
            scalar,
        })
    }

    fn expr(&self, e: &Expr) -> Result<TExpr, SemanticError> {
        Ok(match e {
            Expr::Int(v, _) => TExpr::Int(*v),
            Expr::Bool(b, _) => TExpr::Bool(*b),
            Expr::Var(r) => TExpr::Load(self.place(r)?),
            Expr::Unary(op, inner, span) => {
                let inner = self.expr(inner)?;
                let want = match op {
                    UnaryOp::Neg => ValueType::Int,
                    UnaryOp::Not => ValueType::Bool,
                };
                if inner.ty() != want {
                    return Err(mismatch(*span, format!("operand of unary {op:?} has wrong type")));
                }
                TExpr::Unary(*op, Box::new(inner))
            }
            Expr::Binary(op, l, r, span) => {
                let lhs = self.expr(l)?;
                let rhs = self.expr(r)?;
                let (lt, rt) = (lhs.ty(), rhs.ty());
                let ok = match op {
                    BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => {
                        lt == ValueType::Int && rt == ValueType::Int
                    }
                    BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => {
                        lt == ValueType::Int && rt == ValueType::Int
                    }
                    BinaryOp::And | BinaryOp::Or => lt == ValueType::Bool && rt == ValueType::Bool,
                    BinaryOp::Eq | BinaryOp::Ne => lt == rt,
                };
                if !ok {
                    return Err(mismatch(
                        *span,
                        format!("operator `{}` applied to {lt:?} and {rt:?}", op.symbol()),
                    ));
                }
                TExpr::Binary {
                    op: *op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                    operand_ty: lt,
                }
            }
        })
    }

    fn stmt(&mut self, s: &Stmt) -> Result<TStmt, SemanticError> {
        Ok(match s {
            Stmt::Assign { target, value, span } => {
                let place = self.place(target)?;
                if place.index.is_none() && self.active_loops.contains(&place.var) {
                    return Err(err(*span, SemanticErrorKind::LoopVarAssigned(target.name.clone())));
                }
                let value = self.expr(value)?;
                if value.ty() != value_type(place.scalar) {
                    return Err(mismatch(
                        *span,
                        format!(
                            "cannot assign {:?} value to {} `{}`",
                            value.ty(),
                            place.scalar.keyword(),
                            target.name
                        ),
                    ));
                }
                TStmt::Assign { place, value }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
                span,
            } => {
                let cond = self.expr(cond)?;
                if cond.ty() != ValueType::Bool {
                    return Err(mismatch(*span, "condition must be bool"));
                }
                let then_branch = Box::new(self.stmt(then_branch)?);
                let else_branch = match else_branch {
                    Some(e) => Some(Box::new(self.stmt(e)?)),
                    None => None,
                };
                TStmt::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            Stmt::For {
                var,
                start,
                end,
                body,
                span,
            } => {
                let id = self.resolve(var, *span)?;
                let sym = &self.symbols[id];
                let var_ty = match (&sym.class, &sym.ty) {
                    (VarClass::Local, VarType::Scalar(s)) if s.is_int() => *s,
                    _ => return Err(err(*span, SemanticErrorKind::LoopVarNotLocalScalar(var.clone()))),
                };
                if self.active_loops.contains(&id) {
                    return Err(err(*span, SemanticErrorKind::LoopVarAssigned(var.clone())));
                }
                let (Some(start), Some(end)) = (start.as_int_literal(), end.as_int_literal()) else {
                    let bad = if start.as_int_literal().is_none() { start } else { end };
                    return Err(err(bad.span(), SemanticErrorKind::NonLiteralLoopBound));
                };
                let trip_count = (end as i64 - start as i64 + 1).max(0) as u64;
                // The counter must hold `start` and, after the last iteration, `end + 1`.
                let (min, max) = var_ty.value_range();
                let last = if trip_count > 0 { end as i64 + 1 } else { start as i64 };
                if (start as i64) < min || last > max {
                    return Err(err(
                        *span,
                        SemanticErrorKind::LoopBoundOutOfRange {
                            var: var.clone(),
                            ty: var_ty.keyword(),
                        },
                    ));
                }
                self.active_loops.push(id);
                let body = self.stmt(body);
                self.active_loops.pop();
                TStmt::For {
                    var: id,
                    var_ty,
                    start,
                    end,
                    trip_count,
                    body: Box::new(body?),
                }
            }
            Stmt::Block(stmts, _) => TStmt::Block(stmts.iter().map(|s| self.stmt(s)).collect::<Result<_, _>>()?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check_source, FrontendError, RACK_MANAGER_SOURCE};

    fn kind(src: &str) -> SemanticErrorKind {
        match check_source(src) {
            Err(FrontendError::Semantic(e)) => e.kind,
            other => panic!("expected semantic error, got {other:?}"),
        }
    }

    fn find_for(stmts: &[TStmt]) -> Option<&TStmt> {
        stmts.iter().find_map(|s| match s {
            TStmt::For { .. } => Some(s),
            TStmt::If {
                then_branch,
                else_branch,
                ..
            } => find_for(std::slice::from_ref(then_branch))
                .or_else(|| else_branch.as_ref().and_then(|e| find_for(std::slice::from_ref(e)))),
            TStmt::Block(b) => find_for(b),
            _ => None,
        })
    }

    #[test]
    fn rack_manager_program() {
        let p = check_source(RACK_MANAGER_SOURCE).unwrap();
        let Some(TStmt::For { trip_count, body, .. }) = find_for(&p.body) else {
            panic!("no loop")
        };
        assert_eq!(*trip_count, 10);
        // calculator[i].criticity is a dynamic access with the declared range
        let TStmt::If { cond, .. } = &**body else { panic!() };
        let TExpr::Binary { lhs, .. } = cond else { panic!() };
        let TExpr::Load(place) = &**lhs else { panic!() };
        assert!(matches!(place.index, Some(Index::Dynamic { lo: 1, hi: 10, .. })));
        assert_eq!(place.field_offset, 1);
    }

    #[test]
    fn constant_index_out_of_bounds() {
        let src = RACK_MANAGER_SOURCE.replace("calculator[1].powered", "calculator[11].powered");
        assert_eq!(
            kind(&src),
            SemanticErrorKind::ConstantIndexOutOfBounds {
                name: "calculator".into(),
                index: 11,
                lo: 1,
                hi: 10
            }
        );
        let src = RACK_MANAGER_SOURCE.replace("calculator[1].powered", "calculator[0].powered");
        assert!(matches!(
            kind(&src),
            SemanticErrorKind::ConstantIndexOutOfBounds { index: 0, .. }
        ));
    }

    #[test]
    fn single_external_bool() {
        let p = check_source("bool ground; if (ground) { ground = false; }").unwrap();
        assert_eq!(p.symbols.len(), 1);
    }

    #[test]
    fn rejections() {
        assert_eq!(
            kind("int8 x; y = 1;"),
            SemanticErrorKind::UndeclaredIdentifier("y".into())
        );
        assert_eq!(
            kind("int8 x; local bool x;"),
            SemanticErrorKind::DuplicateDeclaration("x".into())
        );
        assert!(matches!(kind("int8 x; x = true;"), SemanticErrorKind::TypeMismatch(_)));
        assert!(matches!(
            kind("int8 x; if (x) x = 1;"),
            SemanticErrorKind::TypeMismatch(_)
        ));
        assert!(matches!(kind("bool b; b = b < b;"), SemanticErrorKind::TypeMismatch(_)));
        assert!(matches!(
            kind("bool b; b = 1 && b;"),
            SemanticErrorKind::TypeMismatch(_)
        ));
        assert!(matches!(
            kind("int8 a[1..3]; a = 1;"),
            SemanticErrorKind::TypeMismatch(_)
        ));
        assert!(matches!(kind("int8 a; a[1] = 1;"), SemanticErrorKind::TypeMismatch(_)));
        assert!(matches!(
            kind("int8 a[1..3]; a[true] = 1;"),
            SemanticErrorKind::TypeMismatch(_)
        ));
        assert!(matches!(
            kind("struct { int8 f; } s; s.g = 1;"),
            SemanticErrorKind::UnknownField { .. }
        ));
        assert!(matches!(
            kind("struct { int8 f; int8 f; } s;"),
            SemanticErrorKind::DuplicateDeclaration(_)
        ));
        assert!(matches!(
            kind("int8 a[3..1];"),
            SemanticErrorKind::EmptyArrayRange { .. }
        ));
        assert!(matches!(
            kind("int32 a[0..2147483647];"),
            SemanticErrorKind::RegionTooLarge(VarClass::External)
        ));
    }

    #[test]
    fn loop_rules() {
        assert_eq!(
            kind("int8 n; local int8 i; for (i = 1; i <= n; i++) n = 0;"),
            SemanticErrorKind::NonLiteralLoopBound
        );
        assert_eq!(
            kind("int8 i; for (i = 1; i <= 3; i++) {}"),
            SemanticErrorKind::LoopVarNotLocalScalar("i".into())
        );
        assert_eq!(
            kind("local bool i; for (i = 1; i <= 3; i++) {}"),
            SemanticErrorKind::LoopVarNotLocalScalar("i".into())
        );
        assert_eq!(
            kind("local int8 i; for (i = 1; i <= 3; i++) i = 2;"),
            SemanticErrorKind::LoopVarAssigned("i".into())
        );
        assert_eq!(
            kind("local int8 i; for (i = 1; i <= 3; i++) for (i = 1; i <= 2; i++) {}"),
            SemanticErrorKind::LoopVarAssigned("i".into())
        );
        // 127 + 1 would wrap an int8 counter
        assert!(matches!(
            kind("local int8 i; for (i = 0; i <= 127; i++) {}"),
            SemanticErrorKind::LoopBoundOutOfRange { .. }
        ));
        assert!(check_source("local int8 i; for (i = -128; i <= 126; i++) {}").is_ok());
        assert!(check_source("local int8 i; for (i = 5; i <= 1; i++) {}").is_ok());
    }

    #[test]
    fn zero_trip_loop() {
        let p = check_source("local int16 i; for (i = 5; i <= 1; i++) {}").unwrap();
        assert!(matches!(p.body[0], TStmt::For { trip_count: 0, .. }));
    }

    #[test]
    fn loop_var_readable_and_sibling_loops_may_reuse_it() {
        let src = "int8 a[1..4]; local int8 i;
            for (i = 1; i <= 4; i++) a[i] = i;
            for (i = 1; i <= 2; i++) a[i] = a[i] + 1;";
        assert!(check_source(src).is_ok());
    }
}
