//! Reference small-step semantics, metered by fuel.

use std::fmt;

use super::{Instruction, MacroCode, Opcode, Width};

/// Operand stack depth.
pub const STACK_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrapCode {
    DivByZero,
    IndexOutOfBounds,
    RegionViolation,
    StackOverflow,
    StackUnderflow,
    FuelExhausted,
    /// Control reached a byte offset with no instruction (end of code).
    InvalidPc,
}

impl TrapCode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrapCode::DivByZero => "DIV_BY_ZERO",
            TrapCode::IndexOutOfBounds => "INDEX_OUT_OF_BOUNDS",
            TrapCode::RegionViolation => "REGION_VIOLATION",
            TrapCode::StackOverflow => "STACK_OVERFLOW",
            TrapCode::StackUnderflow => "STACK_UNDERFLOW",
            TrapCode::FuelExhausted => "FUEL_EXHAUSTED",
            TrapCode::InvalidPc => "INVALID_PC",
        }
    }
}

impl fmt::Display for TrapCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trap {
    pub code: TrapCode,
    pub pc: u32,
}

/// Worst-case cost of each opcode on one platform, indexed by [`Opcode::ordinal`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CostTable([u64; Opcode::COUNT]);

impl CostTable {
    pub fn uniform(cost: u64) -> Self {
        CostTable([cost; Opcode::COUNT])
    }

    pub fn from_fn(mut f: impl FnMut(Opcode) -> u64) -> Self {
        let mut costs = [0; Opcode::COUNT];
        for &op in Opcode::ALL {
            costs[op.ordinal()] = f(op);
        }
        CostTable(costs)
    }

    pub fn cost(&self, op: Opcode) -> u64 {
        self.0[op.ordinal()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Halt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunStats {
    pub fuel_consumed: u64,
    pub steps: u64,
}

/// Interpreter state. The two memory regions are borrowed; every access is
/// checked against their bounds.
pub struct Machine<'m> {
    pub pc: u32,
    pub stack: Vec<i32>,
    pub locals: &'m mut [u8],
    pub externals: &'m mut [u8],
    pub fuel: u64,
}

fn load(region: &[u8], offset: i64, width: Width) -> Result<i32, TrapCode> {
    let w = width.bytes();
    if offset < 0 || offset as u64 + w as u64 > region.len() as u64 {
        return Err(TrapCode::RegionViolation);
    }
    let b = &region[offset as usize..offset as usize + w];
    Ok(match width {
        Width::W1 => b[0] as i8 as i32,
        Width::W2 => i16::from_le_bytes([b[0], b[1]]) as i32,
        Width::W4 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]),
    })
}

fn store(region: &mut [u8], offset: i64, width: Width, value: i32) -> Result<(), TrapCode> {
    let w = width.bytes();
    if offset < 0 || offset as u64 + w as u64 > region.len() as u64 {
        return Err(TrapCode::RegionViolation);
    }
    region[offset as usize..offset as usize + w].copy_from_slice(&value.to_le_bytes()[..w]);
    Ok(())
}

impl<'m> Machine<'m> {
    pub fn new(locals: &'m mut [u8], externals: &'m mut [u8], fuel: u64) -> Self {
        Machine {
            pc: 0,
            stack: Vec::with_capacity(STACK_DEPTH),
            locals,
            externals,
            fuel,
        }
    }

    fn pop(&mut self) -> Result<i32, TrapCode> {
        self.stack.pop().ok_or(TrapCode::StackUnderflow)
    }

    fn push(&mut self, v: i32) -> Result<(), TrapCode> {
        if self.stack.len() >= STACK_DEPTH {
            return Err(TrapCode::StackOverflow);
        }
        self.stack.push(v);
        Ok(())
    }

    fn binary(&mut self, f: impl FnOnce(i32, i32) -> Result<i32, TrapCode>) -> Result<(), TrapCode> {
        let b = self.pop()?;
        let a = self.pop()?;
        self.push(f(a, b)?)
    }

    /// Executes one instruction at the current pc, charging `cost` fuel first.
    pub fn step(&mut self, instr: &Instruction, cost: u64) -> Result<Flow, TrapCode> {
        use Instruction as I;
        self.fuel = self.fuel.checked_sub(cost).ok_or(TrapCode::FuelExhausted)?;
        let next = self.pc + instr.encoded_len() as u32;
        let flag = |b: bool| Ok(b as i32);
        match *instr {
            I::Halt => return Ok(Flow::Halt),
            I::PushConst(v) => self.push(v)?,
            I::LoadExt(w, off) => {
                let v = load(self.externals, off as i64, w)?;
                self.push(v)?
            }
            I::LoadLoc(w, off) => {
                let v = load(self.locals, off as i64, w)?;
                self.push(v)?
            }
            I::StoreExt(w, off) => {
                let v = self.pop()?;
                store(self.externals, off as i64, w, v)?
            }
            I::StoreLoc(w, off) => {
                let v = self.pop()?;
                store(self.locals, off as i64, w, v)?
            }
            I::LoadExtDyn(w) => {
                let off = self.pop()?;
                let v = load(self.externals, off as i64, w)?;
                self.push(v)?
            }
            I::LoadLocDyn(w) => {
                let off = self.pop()?;
                let v = load(self.locals, off as i64, w)?;
                self.push(v)?
            }
            I::StoreExtDyn(w) => {
                let off = self.pop()?;
                let v = self.pop()?;
                store(self.externals, off as i64, w, v)?
            }
            I::StoreLocDyn(w) => {
                let off = self.pop()?;
                let v = self.pop()?;
                store(self.locals, off as i64, w, v)?
            }
            I::Add => self.binary(|a, b| Ok(a.wrapping_add(b)))?,
            I::Sub => self.binary(|a, b| Ok(a.wrapping_sub(b)))?,
            I::Mul => self.binary(|a, b| Ok(a.wrapping_mul(b)))?,
            I::Div => self.binary(|a, b| {
                if b == 0 {
                    Err(TrapCode::DivByZero)
                } else {
                    Ok(a.wrapping_div(b))
                }
            })?,
            I::Neg => {
                let a = self.pop()?;
                self.push(a.wrapping_neg())?
            }
            I::And => self.binary(|a, b| flag(a != 0 && b != 0))?,
            I::Or => self.binary(|a, b| flag(a != 0 || b != 0))?,
            I::Not => {
                let a = self.pop()?;
                self.push((a == 0) as i32)?
            }
            I::CmpEq => self.binary(|a, b| flag(a == b))?,
            I::CmpNe => self.binary(|a, b| flag(a != b))?,
            I::CmpLt => self.binary(|a, b| flag(a < b))?,
            I::CmpLe => self.binary(|a, b| flag(a <= b))?,
            I::CmpGt => self.binary(|a, b| flag(a > b))?,
            I::CmpGe => self.binary(|a, b| flag(a >= b))?,
            I::Jump(target) => {
                self.pc = target as u32;
                return Ok(Flow::Continue);
            }
            I::JumpIfFalse(target) => {
                if self.pop()? == 0 {
                    self.pc = target as u32;
                    return Ok(Flow::Continue);
                }
            }
            I::BoundsCheck { lo, hi } => {
                let k = *self.stack.last().ok_or(TrapCode::StackUnderflow)?;
                if k < lo || k > hi {
                    return Err(TrapCode::IndexOutOfBounds);
                }
            }
        }
        self.pc = next;
        Ok(Flow::Continue)
    }

    /// Runs from the current pc until HALT or a trap.
    pub fn run(&mut self, code: &MacroCode, costs: &CostTable) -> Result<RunStats, (Trap, RunStats)> {
        let start_fuel = self.fuel;
        let mut steps = 0;
        let stats = |m: &Self, steps| RunStats {
            fuel_consumed: start_fuel - m.fuel,
            steps,
        };
        loop {
            let pc = self.pc;
            let Some(idx) = code.index_at(pc) else {
                return Err((
                    Trap {
                        code: TrapCode::InvalidPc,
                        pc,
                    },
                    stats(self, steps),
                ));
            };
            let instr = &code.instructions()[idx];
            steps += 1;
            match self.step(instr, costs.cost(instr.opcode())) {
                Ok(Flow::Continue) => {}
                Ok(Flow::Halt) => return Ok(stats(self, steps)),
                Err(code) => return Err((Trap { code, pc }, stats(self, steps))),
            }
        }
    }
}
