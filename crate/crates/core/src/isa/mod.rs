//! Platform-independent macro-code instruction set.
//!
//! A stack machine with 32-bit signed values. Each instruction encodes as a
//! one-byte opcode followed by its operands as little-endian `i32`s. Jump
//! targets are byte offsets of instruction starts.

mod machine;

use std::fmt;

use thiserror::Error;

pub use machine::{CostTable, Flow, Machine, RunStats, Trap, TrapCode, STACK_DEPTH};

macro_rules! opcodes {
    ($($name:ident = $byte:literal, $mnemonic:literal, $operands:literal;)*) => {
        /// Opcode numbering. This table is part of the compiled file format.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        #[repr(u8)]
        pub enum Opcode {
            $($name = $byte,)*
        }

        impl Opcode {
            pub const ALL: &'static [Opcode] = &[$(Opcode::$name,)*];

            pub fn mnemonic(self) -> &'static str {
                match self {
                    $(Opcode::$name => $mnemonic,)*
                }
            }

            pub fn operand_count(self) -> usize {
                match self {
                    $(Opcode::$name => $operands,)*
                }
            }

            pub fn from_byte(byte: u8) -> Option<Self> {
                match byte {
                    $($byte => Some(Opcode::$name),)*
                    _ => None,
                }
            }

            pub fn from_mnemonic(m: &str) -> Option<Self> {
                match m {
                    $($mnemonic => Some(Opcode::$name),)*
                    _ => None,
                }
            }
        }
    };
}

opcodes! {
    Halt = 0x00, "HALT", 0;
    PushConst = 0x01, "PUSH_CONST", 1;
    LoadExt = 0x10, "LOAD_EXT", 2;
    StoreExt = 0x11, "STORE_EXT", 2;
    LoadLoc = 0x12, "LOAD_LOC", 2;
    StoreLoc = 0x13, "STORE_LOC", 2;
    LoadExtDyn = 0x14, "LOAD_EXT_DYN", 1;
    StoreExtDyn = 0x15, "STORE_EXT_DYN", 1;
    LoadLocDyn = 0x16, "LOAD_LOC_DYN", 1;
    StoreLocDyn = 0x17, "STORE_LOC_DYN", 1;
    Add = 0x20, "ADD", 0;
    Sub = 0x21, "SUB", 0;
    Mul = 0x22, "MUL", 0;
    Div = 0x23, "DIV", 0;
    Neg = 0x24, "NEG", 0;
    And = 0x28, "AND", 0;
    Or = 0x29, "OR", 0;
    Not = 0x2A, "NOT", 0;
    CmpEq = 0x30, "CMP_EQ", 0;
    CmpNe = 0x31, "CMP_NE", 0;
    CmpLt = 0x32, "CMP_LT", 0;
    CmpLe = 0x33, "CMP_LE", 0;
    CmpGt = 0x34, "CMP_GT", 0;
    CmpGe = 0x35, "CMP_GE", 0;
    Jump = 0x40, "JUMP", 1;
    JumpIfFalse = 0x41, "JUMP_IF_FALSE", 1;
    BoundsCheck = 0x50, "BOUNDS_CHECK", 2;
}

impl Opcode {
    pub const COUNT: usize = Self::ALL.len();

    /// Dense index into [`Opcode::ALL`], used by cost tables.
    pub fn ordinal(self) -> usize {
        Self::ALL.iter().position(|&o| o == self).expect("opcode in table")
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Memory access width in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Width {
    W1 = 1,
    W2 = 2,
    W4 = 4,
}

impl Width {
    pub fn bytes(self) -> usize {
        self as usize
    }

    pub fn from_bytes(n: i32) -> Option<Self> {
        match n {
            1 => Some(Width::W1),
            2 => Some(Width::W2),
            4 => Some(Width::W4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    Halt,
    PushConst(i32),
    LoadExt(Width, i32),
    StoreExt(Width, i32),
    LoadLoc(Width, i32),
    StoreLoc(Width, i32),
    LoadExtDyn(Width),
    StoreExtDyn(Width),
    LoadLocDyn(Width),
    StoreLocDyn(Width),
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    And,
    Or,
    Not,
    CmpEq,
    CmpNe,
    CmpLt,
    CmpLe,
    CmpGt,
    CmpGe,
    /// Absolute byte offset.
    Jump(i32),
    JumpIfFalse(i32),
    BoundsCheck {
        lo: i32,
        hi: i32,
    },
}

impl Instruction {
    pub fn opcode(&self) -> Opcode {
        use Instruction as I;
        match self {
            I::Halt => Opcode::Halt,
            I::PushConst(_) => Opcode::PushConst,
            I::LoadExt(..) => Opcode::LoadExt,
            I::StoreExt(..) => Opcode::StoreExt,
            I::LoadLoc(..) => Opcode::LoadLoc,
            I::StoreLoc(..) => Opcode::StoreLoc,
            I::LoadExtDyn(_) => Opcode::LoadExtDyn,
            I::StoreExtDyn(_) => Opcode::StoreExtDyn,
            I::LoadLocDyn(_) => Opcode::LoadLocDyn,
            I::StoreLocDyn(_) => Opcode::StoreLocDyn,
            I::Add => Opcode::Add,
            I::Sub => Opcode::Sub,
            I::Mul => Opcode::Mul,
            I::Div => Opcode::Div,
            I::Neg => Opcode::Neg,
            I::And => Opcode::And,
            I::Or => Opcode::Or,
            I::Not => Opcode::Not,
            I::CmpEq => Opcode::CmpEq,
            I::CmpNe => Opcode::CmpNe,
            I::CmpLt => Opcode::CmpLt,
            I::CmpLe => Opcode::CmpLe,
            I::CmpGt => Opcode::CmpGt,
            I::CmpGe => Opcode::CmpGe,
            I::Jump(_) => Opcode::Jump,
            I::JumpIfFalse(_) => Opcode::JumpIfFalse,
            I::BoundsCheck { .. } => Opcode::BoundsCheck,
        }
    }

    pub fn operands(&self) -> ([i32; 2], usize) {
        use Instruction as I;
        match *self {
            I::PushConst(v) | I::Jump(v) | I::JumpIfFalse(v) => ([v, 0], 1),
            I::LoadExt(w, o) | I::StoreExt(w, o) | I::LoadLoc(w, o) | I::StoreLoc(w, o) => ([w as i32, o], 2),
            I::LoadExtDyn(w) | I::StoreExtDyn(w) | I::LoadLocDyn(w) | I::StoreLocDyn(w) => ([w as i32, 0], 1),
            I::BoundsCheck { lo, hi } => ([lo, hi], 2),
            _ => ([0, 0], 0),
        }
    }

    pub fn encoded_len(&self) -> usize {
        1 + 4 * self.opcode().operand_count()
    }

    pub fn jump_target(&self) -> Option<i32> {
        match *self {
            Instruction::Jump(t) | Instruction::JumpIfFalse(t) => Some(t),
            _ => None,
        }
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.opcode() as u8);
        let (ops, n) = self.operands();
        for op in &ops[..n] {
            out.extend_from_slice(&op.to_le_bytes());
        }
    }

    fn from_parts(op: Opcode, a: i32, b: i32) -> Result<Self, i32> {
        use Instruction as I;
        let w = || Width::from_bytes(a).ok_or(a);
        Ok(match op {
            Opcode::Halt => I::Halt,
            Opcode::PushConst => I::PushConst(a),
            Opcode::LoadExt => I::LoadExt(w()?, b),
            Opcode::StoreExt => I::StoreExt(w()?, b),
            Opcode::LoadLoc => I::LoadLoc(w()?, b),
            Opcode::StoreLoc => I::StoreLoc(w()?, b),
            Opcode::LoadExtDyn => I::LoadExtDyn(w()?),
            Opcode::StoreExtDyn => I::StoreExtDyn(w()?),
            Opcode::LoadLocDyn => I::LoadLocDyn(w()?),
            Opcode::StoreLocDyn => I::StoreLocDyn(w()?),
            Opcode::Add => I::Add,
            Opcode::Sub => I::Sub,
            Opcode::Mul => I::Mul,
            Opcode::Div => I::Div,
            Opcode::Neg => I::Neg,
            Opcode::And => I::And,
            Opcode::Or => I::Or,
            Opcode::Not => I::Not,
            Opcode::CmpEq => I::CmpEq,
            Opcode::CmpNe => I::CmpNe,
            Opcode::CmpLt => I::CmpLt,
            Opcode::CmpLe => I::CmpLe,
            Opcode::CmpGt => I::CmpGt,
            Opcode::CmpGe => I::CmpGe,
            Opcode::Jump => I::Jump(a),
            Opcode::JumpIfFalse => I::JumpIfFalse(a),
            Opcode::BoundsCheck => I::BoundsCheck { lo: a, hi: b },
        })
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.opcode().mnemonic())?;
        let (ops, n) = self.operands();
        for (i, op) in ops[..n].iter().enumerate() {
            f.write_str(if i == 0 { " " } else { ", " })?;
            write!(f, "{op}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("truncated instruction at offset {offset}")]
    TruncatedInstruction { offset: usize },
    #[error("unknown opcode 0x{byte:02x} at offset {offset}")]
    UnknownOpcode { byte: u8, offset: usize },
    #[error("jump at offset {at} targets {target}, which is not an instruction start")]
    MisalignedJumpTarget { at: usize, target: i32 },
    #[error("invalid access width {value} at offset {at}")]
    InvalidWidth { at: usize, value: i32 },
}

/// A validated instruction sequence together with its byte layout.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MacroCode {
    instructions: Vec<Instruction>,
    offsets: Vec<u32>,
    byte_length: u32,
}

impl MacroCode {
    /// Wraps instructions whose jump targets are already byte offsets.
    ///
    /// Fails like [`MacroCode::decode`] would on the encoded form.
    pub fn new(instructions: Vec<Instruction>) -> Result<Self, DecodeError> {
        let mut offsets = Vec::with_capacity(instructions.len());
        let mut pos = 0u64;
        for i in &instructions {
            offsets.push(pos as u32);
            pos += i.encoded_len() as u64;
        }
        let byte_length = u32::try_from(pos).map_err(|_| DecodeError::TruncatedInstruction { offset: 0 })?;
        let code = MacroCode {
            instructions,
            offsets,
            byte_length,
        };
        code.check_targets()?;
        Ok(code)
    }

    fn check_targets(&self) -> Result<(), DecodeError> {
        for (i, instr) in self.instructions.iter().enumerate() {
            if let Some(target) = instr.jump_target() {
                let ok = target as i64 == self.byte_length as i64
                    || (target >= 0 && self.offsets.binary_search(&(target as u32)).is_ok());
                if !ok {
                    return Err(DecodeError::MisalignedJumpTarget {
                        at: self.offsets[i] as usize,
                        target,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut instructions = Vec::new();
        let mut pos = 0;
        while pos < bytes.len() {
            let byte = bytes[pos];
            let op = Opcode::from_byte(byte).ok_or(DecodeError::UnknownOpcode { byte, offset: pos })?;
            let n = op.operand_count();
            let end = pos + 1 + 4 * n;
            if end > bytes.len() {
                return Err(DecodeError::TruncatedInstruction { offset: pos });
            }
            let operand = |k: usize| {
                let s = pos + 1 + 4 * k;
                i32::from_le_bytes(bytes[s..s + 4].try_into().unwrap())
            };
            let a = if n > 0 { operand(0) } else { 0 };
            let b = if n > 1 { operand(1) } else { 0 };
            let instr =
                Instruction::from_parts(op, a, b).map_err(|value| DecodeError::InvalidWidth { at: pos, value })?;
            instructions.push(instr);
            pos = end;
        }
        Self::new(instructions)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_length as usize);
        for i in &self.instructions {
            i.encode_into(&mut out);
        }
        out
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn byte_length(&self) -> u32 {
        self.byte_length
    }

    pub fn offset_of(&self, index: usize) -> u32 {
        self.offsets.get(index).copied().unwrap_or(self.byte_length)
    }

    /// Instruction index starting at byte `offset`, if any.
    pub fn index_at(&self, offset: u32) -> Option<usize> {
        self.offsets.binary_search(&offset).ok()
    }

    /// One line per instruction, `offset: MNEMONIC operands`, offsets in decimal like jump targets.
    pub fn disassemble(&self) -> String {
        let mut out = String::new();
        for (off, i) in self.offsets.iter().zip(&self.instructions) {
            out.push_str(&format!("{off:04}: {i}\n"));
        }
        out
    }
}

/// Encodes an instruction list. Jump targets are written as given.
pub fn encode(instructions: &[Instruction]) -> Vec<u8> {
    let mut out = Vec::new();
    for i in instructions {
        i.encode_into(&mut out);
    }
    out
}

/// Decodes and validates a byte string into instructions.
pub fn decode(bytes: &[u8]) -> Result<Vec<Instruction>, DecodeError> {
    MacroCode::decode(bytes).map(|c| c.instructions)
}
