//! Packed variable layout: declaration order, no padding, two regions.

use crate::lang::{TypedProgram, VarClass, VarDecl, VarType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSlot {
    pub name: String,
    pub offset: u32,
    pub size: u32,
    pub ty: VarType,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VariableLayout {
    pub externals: Vec<VarSlot>,
    pub locals: Vec<VarSlot>,
    pub external_total: u32,
    pub local_total: u32,
}

impl VariableLayout {
    pub fn slots(&self, class: VarClass) -> &[VarSlot] {
        match class {
            VarClass::External => &self.externals,
            VarClass::Local => &self.locals,
        }
    }

    pub fn find(&self, class: VarClass, name: &str) -> Option<&VarSlot> {
        self.slots(class).iter().find(|s| s.name == name)
    }
}

/// Lays out declarations that have passed analysis (sizes fit in `u32`).
pub fn layout_declarations(decls: &[VarDecl]) -> VariableLayout {
    let mut layout = VariableLayout::default();
    for d in decls {
        let size = d.ty.byte_size().expect("analyzed declaration") as u32;
        let (slots, total) = match d.class {
            VarClass::External => (&mut layout.externals, &mut layout.external_total),
            VarClass::Local => (&mut layout.locals, &mut layout.local_total),
        };
        slots.push(VarSlot {
            name: d.name.clone(),
            offset: *total,
            size,
            ty: d.ty.clone(),
        });
        *total += size;
    }
    layout
}

pub fn layout_variables(p: &TypedProgram) -> VariableLayout {
    layout_declarations(&p.ast.declarations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check_source, RACK_MANAGER_SOURCE};

    fn summary(slots: &[VarSlot]) -> Vec<(&str, u32, u32)> {
        slots.iter().map(|s| (s.name.as_str(), s.offset, s.size)).collect()
    }

    #[test]
    fn rack_manager_layout() {
        let layout = layout_variables(&check_source(RACK_MANAGER_SOURCE).unwrap());
        assert_eq!(summary(&layout.externals), [("ground", 0, 1), ("calculator", 1, 20)]);
        assert_eq!(summary(&layout.locals), [("i", 0, 1)]);
        assert_eq!((layout.external_total, layout.local_total), (21, 1));
    }

    #[test]
    fn empty_program() {
        let layout = layout_variables(&check_source("").unwrap());
        assert_eq!(layout, VariableLayout::default());
    }

    #[test]
    fn no_alignment_padding() {
        let layout = layout_variables(&check_source("int32 a; int8 b; int16 c; local int8 x; local int32 y;").unwrap());
        assert_eq!(summary(&layout.externals), [("a", 0, 4), ("b", 4, 1), ("c", 5, 2)]);
        assert_eq!(summary(&layout.locals), [("x", 0, 1), ("y", 1, 4)]);
        assert_eq!((layout.external_total, layout.local_total), (7, 5));
    }

    #[test]
    fn struct_fields_packed() {
        let layout = layout_variables(
            &check_source("struct { int8 a; int32 b; bool c; } s; struct { int16 x; int8 y; } arr[-1..1];").unwrap(),
        );
        assert_eq!(summary(&layout.externals), [("s", 0, 6), ("arr", 6, 9)]);
    }
}
