//! `.vars` scenario inputs and the `.layout` sidecar.

use super::{HarnessError, Value, VarPath};
use crate::compiler::{layout_variables, VariableLayout};
use crate::lang::ast::Span;
use crate::lang::{check_source, VarClass, VarDecl};

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Parses `path = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_vars(text: &str) -> Result<Vec<(VarPath, Value)>, HarnessError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| HarnessError::Syntax { line: n + 1, message };
        let (path, value) = line
            .split_once('=')
            .ok_or_else(|| syntax("expected `path = value`".into()))?;
        let path = path.parse().map_err(|e: HarnessError| syntax(e.to_string()))?;
        let value = value.parse().map_err(|e: HarnessError| syntax(e.to_string()))?;
        out.push((path, value));
    }
    Ok(out)
}

fn class_name(c: VarClass) -> &'static str {
    match c {
        VarClass::External => "external",
        VarClass::Local => "local",
    }
}

/// One line per variable: `class name offset size declaration`.
pub fn layout_to_text(layout: &VariableLayout) -> String {
    let mut out = String::from("# class name offset size declaration\n");
    let all = [VarClass::External, VarClass::Local];
    for class in all {
        for (i, s) in layout.slots(class).iter().enumerate() {
            let decl = VarDecl {
                name: s.name.clone(),
                class,
                ty: s.ty.clone(),
                decl_order: i,
                span: Span::default(),
            };
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                class_name(class),
                s.name,
                s.offset,
                s.size,
                decl
            ));
        }
    }
    out
}

/// Reads a sidecar back. The declarations are re-parsed and re-laid-out,
/// and the listed offsets and sizes must agree with that layout.
pub fn layout_from_text(text: &str) -> Result<VariableLayout, HarnessError> {
    let mut listed = Vec::new();
    let mut source = String::new();
    for (n, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let syntax = |message: &str| HarnessError::Syntax {
            line: n + 1,
            message: message.to_string(),
        };
        let mut parts = line.splitn(5, ' ');
        let mut next = || {
            parts
                .next()
                .ok_or_else(|| syntax("expected `class name offset size declaration`"))
        };
        let class = match next()? {
            "external" => VarClass::External,
            "local" => VarClass::Local,
            _ => return Err(syntax("class must be `external` or `local`")),
        };
        let name = next()?.to_string();
        let offset: u32 = next()?.parse().map_err(|_| syntax("bad offset"))?;
        let size: u32 = next()?.parse().map_err(|_| syntax("bad size"))?;
        let decl = next()?;
        listed.push((n + 1, class, name, offset, size));
        source.push_str(decl);
        source.push('\n');
    }

    let program = check_source(&source).map_err(HarnessError::LayoutSource)?;
    let layout = layout_variables(&program);
    let computed = layout
        .externals
        .iter()
        .map(|s| (VarClass::External, s))
        .chain(layout.locals.iter().map(|s| (VarClass::Local, s)));
    if computed.clone().count() != listed.len() || !program.ast.statements.is_empty() {
        return Err(HarnessError::Syntax {
            line: 0,
            message: "each line must hold exactly one declaration".into(),
        });
    }
    for ((line, class, name, offset, size), (c, s)) in listed.iter().zip(computed) {
        if *class != c || *name != s.name || *offset != s.offset || *size != s.size {
            return Err(HarnessError::Syntax {
                line: *line,
                message: format!(
                    "listed {} {name} at {offset}+{size}, declaration gives {} {} at {}+{}",
                    class_name(*class),
                    class_name(c),
                    s.name,
                    s.offset,
                    s.size
                ),
            });
        }
    }
    Ok(layout)
}
