//! Canonical pretty-printer. Output re-parses to a structurally equal [`Ast`].

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

impl Display for StructType {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str("struct {")?;
        for field in &self.fields {
            write!(f, " {} {};", field.ty.keyword(), field.name)?;
        }
        f.write_str(" }")
    }
}

impl Display for ElemType {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ElemType::Scalar(s) => f.write_str(s.keyword()),
            ElemType::Struct(s) => s.fmt(f),
        }
    }
}

impl Display for VarDecl {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.class == VarClass::Local {
            f.write_str("local ")?;
        }
        match &self.ty {
            VarType::Scalar(s) => write!(f, "{} {};", s.keyword(), self.name),
            VarType::Struct(s) => write!(f, "{s} {};", self.name),
            VarType::Array { elem, lo, hi } => write!(f, "{elem} {}[{lo}..{hi}];", self.name),
        }
    }
}

impl Display for VarRef {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(index) = &self.index {
            write!(f, "[{index}]")?;
        }
        if let Some(field) = &self.field {
            write!(f, ".{field}")?;
        }
        Ok(())
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v, _) => write!(f, "{v}"),
            Expr::Bool(b, _) => write!(f, "{b}"),
            Expr::Var(v) => v.fmt(f),
            Expr::Unary(UnaryOp::Neg, e, _) => write!(f, "-({e})"),
            Expr::Unary(UnaryOp::Not, e, _) => write!(f, "!({e})"),
            Expr::Binary(op, l, r, _) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

fn write_stmt(out: &mut String, stmt: &Stmt, depth: usize) -> fmt::Result {
    let pad = "    ".repeat(depth);
    match stmt {
        Stmt::Assign { target, value, .. } => writeln!(out, "{pad}{target} = {value};"),
        Stmt::If {
            cond,
            then_branch,
            else_branch,
            ..
        } => {
            writeln!(out, "{pad}if ({cond})")?;
            write_stmt(out, then_branch, depth + 1)?;
            if let Some(e) = else_branch {
                writeln!(out, "{pad}else")?;
                write_stmt(out, e, depth + 1)?;
            }
            Ok(())
        }
        Stmt::For {
            var, start, end, body, ..
        } => {
            writeln!(out, "{pad}for ({var} = {start}; {var} <= {end}; {var}++)")?;
            write_stmt(out, body, depth + 1)
        }
        Stmt::Block(stmts, _) => {
            writeln!(out, "{pad}{{")?;
            for s in stmts {
                write_stmt(out, s, depth + 1)?;
            }
            writeln!(out, "{pad}}}")
        }
    }
}

impl Display for Stmt {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_stmt(&mut out, self, 0)?;
        f.write_str(&out)
    }
}

impl Display for Ast {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        for d in &self.declarations {
            writeln!(f, "{d}")?;
        }
        for s in &self.statements {
            s.fmt(f)?;
        }
        Ok(())
    }
}
