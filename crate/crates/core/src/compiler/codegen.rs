//! Stack-machine code generation and the structure map used for WCET.

use std::ops::Range;

use thiserror::Error;

use super::layout::VariableLayout;
use crate::isa::{DecodeError, Instruction, MacroCode, Width, STACK_DEPTH};
use crate::lang::{
    BinaryOp, Index, Place, ScalarType, TExpr, TStmt, TypedProgram, UnaryOp, ValueType, VarClass, VarType,
};

/// Control structure of the emitted code, by instruction index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeRegion {
    /// Instructions executed exactly once whenever the region is entered.
    Straight(Range<usize>),
    Seq(Vec<CodeRegion>),
    /// `cond` ends with the conditional jump; a then-branch followed by an
    /// else-branch ends with the jump over it.
    Branch {
        cond: Range<usize>,
        then_branch: Box<CodeRegion>,
        else_branch: Option<Box<CodeRegion>>,
    },
    /// `test` runs `trip_count + 1` times, `body` and `step` run `trip_count` times.
    Loop {
        init: Range<usize>,
        test: Range<usize>,
        body: Box<CodeRegion>,
        step: Range<usize>,
        trip_count: u64,
    },
}

impl CodeRegion {
    /// Every instruction index covered by the region, in order.
    pub fn covered(&self, out: &mut Vec<usize>) {
        match self {
            CodeRegion::Straight(r) => out.extend(r.clone()),
            CodeRegion::Seq(parts) => parts.iter().for_each(|p| p.covered(out)),
            CodeRegion::Branch {
                cond,
                then_branch,
                else_branch,
            } => {
                out.extend(cond.clone());
                then_branch.covered(out);
                if let Some(e) = else_branch {
                    e.covered(out);
                }
            }
            CodeRegion::Loop {
                init, test, body, step, ..
            } => {
                out.extend(init.clone());
                out.extend(test.clone());
                body.covered(out);
                out.extend(step.clone());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureMap {
    pub root: CodeRegion,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error("jump target beyond the 32-bit operand range (program too large)")]
    JumpOutOfRange,
    #[error("expression needs {0} operand stack entries, the limit is {STACK_DEPTH}")]
    StackDepthExceeded(usize),
    #[error("emitted code failed validation: {0}")]
    Invalid(#[from] DecodeError),
}

fn width(s: ScalarType) -> Width {
    match s.byte_size() {
        1 => Width::W1,
        2 => Width::W2,
        _ => Width::W4,
    }
}

struct Gen<'a> {
    program: &'a TypedProgram,
    offsets: Vec<u32>,
    code: Vec<Instruction>,
    depth: usize,
    max_depth: usize,
}

impl<'a> Gen<'a> {
    fn here(&self) -> usize {
        self.code.len()
    }

    fn emit(&mut self, instr: Instruction) -> usize {
        use Instruction as I;
        let effect: isize = match instr {
            I::PushConst(_) | I::LoadExt(..) | I::LoadLoc(..) => 1,
            I::StoreExt(..) | I::StoreLoc(..) | I::JumpIfFalse(_) => -1,
            I::StoreExtDyn(_) | I::StoreLocDyn(_) => -2,
            I::Add | I::Sub | I::Mul | I::Div | I::And | I::Or => -1,
            I::CmpEq | I::CmpNe | I::CmpLt | I::CmpLe | I::CmpGt | I::CmpGe => -1,
            _ => 0,
        };
        self.depth = (self.depth as isize + effect) as usize;
        self.max_depth = self.max_depth.max(self.depth);
        self.code.push(instr);
        self.code.len() - 1
    }

    /// Points the jump at `at` to instruction index `target` (fixed up to bytes later).
    fn patch(&mut self, at: usize, target: usize) {
        let t = target as i32;
        self.code[at] = match self.code[at] {
            Instruction::Jump(_) => Instruction::Jump(t),
            Instruction::JumpIfFalse(_) => Instruction::JumpIfFalse(t),
            other => unreachable!("patching non-jump {other}"),
        };
    }

    fn class(&self, place: &Place) -> VarClass {
        self.program.symbols[place.var].class
    }

    fn element_size(&self, place: &Place) -> u32 {
        match &self.program.symbols[place.var].ty {
            VarType::Array { elem, .. } => elem.byte_size(),
            _ => 0,
        }
    }

    /// Static byte offset, or pushes the dynamic offset and returns `None`.
    fn address(&mut self, place: &Place) -> Option<i32> {
        let base = self.offsets[place.var] as i64 + place.field_offset as i64;
        let elem = self.element_size(place) as i64;
        match &place.index {
            None => Some(base as i32),
            Some(Index::Static(k)) => {
                let lo = match self.program.symbols[place.var].ty {
                    VarType::Array { lo, .. } => lo as i64,
                    _ => 0,
                };
                Some((base + (*k as i64 - lo) * elem) as i32)
            }
            Some(Index::Dynamic { expr, lo, hi }) => {
                self.expr(expr);
                self.emit(Instruction::BoundsCheck { lo: *lo, hi: *hi });
                self.emit(Instruction::PushConst(*lo));
                self.emit(Instruction::Sub);
                self.emit(Instruction::PushConst(elem as i32));
                self.emit(Instruction::Mul);
                self.emit(Instruction::PushConst(base as i32));
                self.emit(Instruction::Add);
                None
            }
        }
    }

    fn load(&mut self, place: &Place) {
        let w = width(place.scalar);
        let ext = self.class(place) == VarClass::External;
        let instr = match (self.address(place), ext) {
            (Some(off), true) => Instruction::LoadExt(w, off),
            (Some(off), false) => Instruction::LoadLoc(w, off),
            (None, true) => Instruction::LoadExtDyn(w),
            (None, false) => Instruction::LoadLocDyn(w),
        };
        self.emit(instr);
    }

    fn store(&mut self, place: &Place) {
        let w = width(place.scalar);
        let ext = self.class(place) == VarClass::External;
        let instr = match (self.address(place), ext) {
            (Some(off), true) => Instruction::StoreExt(w, off),
            (Some(off), false) => Instruction::StoreLoc(w, off),
            (None, true) => Instruction::StoreExtDyn(w),
            (None, false) => Instruction::StoreLocDyn(w),
        };
        self.emit(instr);
    }

    fn expr(&mut self, e: &TExpr) {
        use Instruction as I;
        match e {
            TExpr::Int(v) => {
                self.emit(I::PushConst(*v));
            }
            TExpr::Bool(b) => {
                self.emit(I::PushConst(*b as i32));
            }
            TExpr::Load(p) => self.load(p),
            TExpr::Unary(op, inner) => {
                self.expr(inner);
                self.emit(match op {
                    UnaryOp::Neg => I::Neg,
                    UnaryOp::Not => I::Not,
                });
            }
            TExpr::Binary {
                op,
                lhs,
                rhs,
                operand_ty,
            } => {
                // Stored bools may hold any nonzero byte; compare their truth values.
                let normalize = *operand_ty == ValueType::Bool && matches!(op, BinaryOp::Eq | BinaryOp::Ne);
                self.expr(lhs);
                if normalize {
                    self.emit(I::Not);
                }
                self.expr(rhs);
                if normalize {
                    self.emit(I::Not);
                }
                self.emit(match op {
                    BinaryOp::Add => I::Add,
                    BinaryOp::Sub => I::Sub,
                    BinaryOp::Mul => I::Mul,
                    BinaryOp::Div => I::Div,
                    BinaryOp::And => I::And,
                    BinaryOp::Or => I::Or,
                    BinaryOp::Eq => I::CmpEq,
                    BinaryOp::Ne => I::CmpNe,
                    BinaryOp::Lt => I::CmpLt,
                    BinaryOp::Le => I::CmpLe,
                    BinaryOp::Gt => I::CmpGt,
                    BinaryOp::Ge => I::CmpGe,
                });
            }
        }
    }

    fn stmt(&mut self, s: &TStmt) -> CodeRegion {
        use Instruction as I;
        match s {
            TStmt::Assign { place, value } => {
                let start = self.here();
                self.expr(value);
                self.store(place);
                CodeRegion::Straight(start..self.here())
            }
            TStmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let start = self.here();
                self.expr(cond);
                let jif = self.emit(I::JumpIfFalse(0));
                let cond_range = start..self.here();
                let mut then_region = self.stmt(then_branch);
                let else_region = match else_branch {
                    Some(e) => {
                        let jump = self.emit(I::Jump(0));
                        then_region = CodeRegion::Seq(vec![then_region, CodeRegion::Straight(jump..jump + 1)]);
                        let else_start = self.here();
                        self.patch(jif, else_start);
                        let r = self.stmt(e);
                        let end = self.here();
                        self.patch(jump, end);
                        Some(Box::new(r))
                    }
                    None => {
                        let end = self.here();
                        self.patch(jif, end);
                        None
                    }
                };
                CodeRegion::Branch {
                    cond: cond_range,
                    then_branch: Box::new(then_region),
                    else_branch: else_region,
                }
            }
            TStmt::For {
                var,
                var_ty,
                start,
                end,
                trip_count,
                body,
            } => {
                let w = width(*var_ty);
                let off = self.offsets[*var] as i32;
                let init_start = self.here();
                self.emit(I::PushConst(*start));
                self.emit(I::StoreLoc(w, off));
                let test_start = self.here();
                self.emit(I::LoadLoc(w, off));
                self.emit(I::PushConst(*end));
                self.emit(I::CmpLe);
                let jif = self.emit(I::JumpIfFalse(0));
                let body_start = self.here();
                let body_region = self.stmt(body);
                let step_start = self.here();
                self.emit(I::LoadLoc(w, off));
                self.emit(I::PushConst(1));
                self.emit(I::Add);
                self.emit(I::StoreLoc(w, off));
                self.emit(I::Jump(test_start as i32));
                let exit = self.here();
                self.patch(jif, exit);
                CodeRegion::Loop {
                    init: init_start..test_start,
                    test: test_start..body_start,
                    body: Box::new(body_region),
                    step: step_start..exit,
                    trip_count: *trip_count,
                }
            }
            TStmt::Block(stmts) => CodeRegion::Seq(stmts.iter().map(|s| self.stmt(s)).collect()),
        }
    }
}

/// Emits macro-code for an analyzed program.
pub fn generate_code(
    program: &TypedProgram,
    layout: &VariableLayout,
) -> Result<(MacroCode, StructureMap), CodegenError> {
    let offsets = program
        .symbols
        .iter()
        .map(|s| {
            layout
                .find(s.class, &s.name)
                .expect("layout covers every symbol")
                .offset
        })
        .collect();
    let mut gen = Gen {
        program,
        offsets,
        code: Vec::new(),
        depth: 0,
        max_depth: 0,
    };
    let mut parts: Vec<CodeRegion> = program.body.iter().map(|s| gen.stmt(s)).collect();
    let halt = gen.emit(Instruction::Halt);
    parts.push(CodeRegion::Straight(halt..halt + 1));

    if gen.max_depth > STACK_DEPTH {
        return Err(CodegenError::StackDepthExceeded(gen.max_depth));
    }

    // Jump operands hold instruction indices until here.
    let mut byte_offsets = Vec::with_capacity(gen.code.len() + 1);
    let mut pos = 0u64;
    for i in &gen.code {
        byte_offsets.push(pos);
        pos += i.encoded_len() as u64;
    }
    byte_offsets.push(pos);
    let to_bytes = |idx: i32| i32::try_from(byte_offsets[idx as usize]).map_err(|_| CodegenError::JumpOutOfRange);
    let mut instructions = gen.code;
    for instr in &mut instructions {
        *instr = match *instr {
            Instruction::Jump(t) => Instruction::Jump(to_bytes(t)?),
            Instruction::JumpIfFalse(t) => Instruction::JumpIfFalse(to_bytes(t)?),
            other => other,
        };
    }

    Ok((
        MacroCode::new(instructions)?,
        StructureMap {
            root: CodeRegion::Seq(parts),
        },
    ))
}
