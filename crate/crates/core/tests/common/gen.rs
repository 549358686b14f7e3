//! Random adaptation programs, perf data and compiled files.

use rand::seq::SliceRandom;
use rand::Rng;

use macrocell_core::compiler::{CompiledFile, WcetEntry};
use macrocell_core::isa::{Instruction, MacroCode, Opcode, Width};
use macrocell_core::perfdata::{PerfData, PlatformType};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Scalar {
    Bool,
    I8,
    I16,
    I32,
}

impl Scalar {
    fn keyword(self) -> &'static str {
        match self {
            Scalar::Bool => "bool",
            Scalar::I8 => "int8",
            Scalar::I16 => "int16",
            Scalar::I32 => "int32",
        }
    }

    fn random(rng: &mut impl Rng) -> Self {
        *[Scalar::Bool, Scalar::I8, Scalar::I16, Scalar::I32]
            .choose(rng)
            .unwrap()
    }
}

#[derive(Clone)]
enum Elem {
    Scalar(Scalar),
    Struct(Vec<(String, Scalar)>),
}

#[derive(Clone)]
struct Decl {
    name: String,
    local: bool,
    elem: Elem,
    range: Option<(i32, i32)>,
}

impl Decl {
    fn render(&self) -> String {
        let ty = match &self.elem {
            Elem::Scalar(s) => s.keyword().to_string(),
            Elem::Struct(fields) => {
                let body: String = fields.iter().map(|(n, s)| format!(" {} {n};", s.keyword())).collect();
                format!("struct {{{body} }}")
            }
        };
        let range = self.range.map(|(lo, hi)| format!("[{lo}..{hi}]")).unwrap_or_default();
        let local = if self.local { "local " } else { "" };
        format!("{local}{ty} {}{range};", self.name)
    }
}

struct Loop {
    var: String,
    start: i32,
    end: i32,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    decls: Vec<Decl>,
    loop_vars: Vec<String>,
    active: Vec<Loop>,
    budget: usize,
    straight: bool,
}

fn lit(v: i64) -> String {
    if v < 0 {
        format!("({v})")
    } else {
        v.to_string()
    }
}

impl<R: Rng> Gen<'_, R> {
    fn index(&mut self, lo: i32, hi: i32, depth: u32) -> String {
        let k = self.rng.gen_range(lo..=hi) as i64;
        let roll = self.rng.gen_range(0..10);
        if self.straight {
            return if roll < 6 { lit(k) } else { format!("({} + 0)", lit(k)) };
        }
        // loops whose counter, shifted to `lo`, stays inside the array
        let fitting: Vec<(String, i32)> = self
            .active
            .iter()
            .filter(|l| l.end - l.start <= hi - lo)
            .map(|l| (l.var.clone(), l.start))
            .collect();
        match roll {
            0..=3 => lit(k),
            4..=6 if !fitting.is_empty() => {
                let (var, start) = fitting.choose(self.rng).unwrap();
                format!("({var} + {})", lit(lo as i64 - *start as i64))
            }
            7 if depth > 0 => format!("({} + {} / 40)", lit(lo as i64), self.int_expr(depth - 1)),
            _ => format!("({} + 0)", lit(k)),
        }
    }

    /// A readable or writable scalar place of the wanted kind, if one exists.
    fn place(&mut self, want_bool: bool, depth: u32) -> Option<String> {
        let mut options = Vec::new();
        for (i, d) in self.decls.iter().enumerate() {
            match &d.elem {
                Elem::Scalar(s) if (*s == Scalar::Bool) == want_bool => options.push((i, None)),
                Elem::Struct(fields) => {
                    for (f, s) in fields {
                        if (*s == Scalar::Bool) == want_bool {
                            options.push((i, Some(f.clone())));
                        }
                    }
                }
                _ => {}
            }
        }
        let (i, field) = options.choose(self.rng)?.clone();
        let d = self.decls[i].clone();
        let mut out = d.name.clone();
        if let Some((lo, hi)) = d.range {
            out.push_str(&format!("[{}]", self.index(lo, hi, depth)));
        }
        if let Some(f) = field {
            out.push('.');
            out.push_str(&f);
        }
        Some(out)
    }

    fn int_leaf(&mut self, depth: u32) -> String {
        match self.rng.gen_range(0..10) {
            0..=3 => {
                let v: i64 = if self.rng.gen_bool(0.1) {
                    self.rng.gen_range(i32::MIN..=i32::MAX) as i64
                } else {
                    self.rng.gen_range(-20..=20)
                };
                lit(v)
            }
            4 if !self.loop_vars.is_empty() => self.loop_vars.choose(self.rng).unwrap().clone(),
            _ => self.place(false, depth).unwrap_or_else(|| "3".into()),
        }
    }

    fn int_expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.35) {
            return self.int_leaf(depth);
        }
        match self.rng.gen_range(0..10) {
            0 => format!("-({})", self.int_expr(depth - 1)),
            1 => {
                let lhs = self.int_expr(depth - 1);
                let rhs = if self.straight || self.rng.gen_bool(0.7) {
                    let mut d = self.rng.gen_range(-9..=9);
                    if d == 0 {
                        d = 7;
                    }
                    lit(d)
                } else {
                    self.int_expr(depth - 1)
                };
                format!("({lhs} / {rhs})")
            }
            n => {
                let op = ["+", "-", "*"][n as usize % 3];
                format!("({} {op} {})", self.int_expr(depth - 1), self.int_expr(depth - 1))
            }
        }
    }

    fn bool_expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return match self.rng.gen_range(0..4) {
                0 => ["true", "false"].choose(self.rng).unwrap().to_string(),
                _ => self.place(true, depth).unwrap_or_else(|| "true".into()),
            };
        }
        match self.rng.gen_range(0..6) {
            0 => format!("!({})", self.bool_expr(depth - 1)),
            1 => {
                let op = ["&&", "||"].choose(self.rng).unwrap();
                format!("({} {op} {})", self.bool_expr(depth - 1), self.bool_expr(depth - 1))
            }
            2 => {
                let op = ["==", "!="].choose(self.rng).unwrap();
                format!("({} {op} {})", self.bool_expr(depth - 1), self.bool_expr(depth - 1))
            }
            _ => {
                let op = ["==", "!=", "<", "<=", ">", ">="].choose(self.rng).unwrap();
                format!("({} {op} {})", self.int_expr(depth - 1), self.int_expr(depth - 1))
            }
        }
    }

    fn assign(&mut self) -> String {
        let want_bool = self.rng.gen_bool(0.4);
        let (target, want_bool) = match self.place(want_bool, 1) {
            Some(t) => (t, want_bool),
            None => (
                self.place(!want_bool, 1).expect("at least one data variable"),
                !want_bool,
            ),
        };
        let value = if want_bool { self.bool_expr(3) } else { self.int_expr(3) };
        format!("{target} = {value};")
    }

    fn stmt(&mut self, nesting: u32) -> String {
        self.budget -= 1;
        if self.straight || nesting >= 3 || self.budget == 0 {
            return self.assign();
        }
        match self.rng.gen_range(0..10) {
            0..=4 => self.assign(),
            5 | 6 => {
                let cond = self.bool_expr(2);
                let then = self.block(nesting + 1);
                if self.rng.gen_bool(0.5) && self.budget > 0 {
                    let els = self.block(nesting + 1);
                    format!("if ({cond}) {then} else {els}")
                } else {
                    format!("if ({cond}) {then}")
                }
            }
            7 | 8 => {
                let free: Vec<_> = self
                    .loop_vars
                    .iter()
                    .filter(|v| !self.active.iter().any(|l| &l.var == *v))
                    .cloned()
                    .collect();
                let Some(var) = free.choose(self.rng).cloned() else {
                    return self.assign();
                };
                let start = self.rng.gen_range(-3..=5);
                let end = start + self.rng.gen_range(-1..=3);
                self.active.push(Loop {
                    var: var.clone(),
                    start,
                    end,
                });
                let body = self.block(nesting + 1);
                self.active.pop();
                format!(
                    "for ({var} = {}; {var} <= {}; {var}++) {body}",
                    lit(start as i64),
                    lit(end as i64)
                )
            }
            _ => self.block(nesting + 1),
        }
    }

    fn block(&mut self, nesting: u32) -> String {
        let n = self.rng.gen_range(1..=3).min(self.budget.max(1));
        let mut parts = Vec::new();
        for _ in 0..n {
            if self.budget == 0 {
                break;
            }
            parts.push(self.stmt(nesting));
        }
        if parts.is_empty() {
            return "{ }".into();
        }
        format!("{{ {} }}", parts.join(" "))
    }
}

fn random_decl(rng: &mut impl Rng, name: String, local: bool) -> Decl {
    let elem = if rng.gen_bool(0.3) {
        let n = rng.gen_range(1..=3);
        Elem::Struct((0..n).map(|i| (format!("f{i}"), Scalar::random(rng))).collect())
    } else {
        Elem::Scalar(Scalar::random(rng))
    };
    let range = rng.gen_bool(0.5).then(|| {
        let lo = rng.gen_range(-3..=3);
        (lo, lo + rng.gen_range(0..=6))
    });
    Decl {
        name,
        local,
        elem,
        range,
    }
}

/// Program source with at most `max_statements` statements. Straight-line
/// programs have no branches or loops and never trap.
pub fn program(rng: &mut impl Rng, max_statements: usize, straight_line: bool) -> String {
    let mut decls: Vec<Decl> = (0..rng.gen_range(1..=5))
        .map(|i| random_decl(rng, format!("e{i}"), false))
        .collect();
    decls.extend((0..rng.gen_range(0..=3)).map(|i| random_decl(rng, format!("l{i}"), true)));
    let loop_types = ["int8", "int16", "int32"];
    let loop_vars: Vec<String> = if straight_line {
        Vec::new()
    } else {
        (0..3).map(|i| format!("i{i}")).collect()
    };

    let mut source: String = decls.iter().map(|d| d.render() + "\n").collect();
    for (i, v) in loop_vars.iter().enumerate() {
        source.push_str(&format!("local {} {v};\n", loop_types[i]));
    }

    let budget = rng.gen_range(1..=max_statements);
    let mut g = Gen {
        rng,
        decls,
        loop_vars,
        active: Vec::new(),
        budget,
        straight: straight_line,
    };
    while g.budget > 0 {
        let s = g.stmt(0);
        source.push_str(&s);
        source.push('\n');
    }
    source
}

pub fn platform(rng: &mut impl Rng) -> PlatformType {
    let field = |rng: &mut _| {
        let n = Rng::gen_range(rng, 1..=8);
        (0..n)
            .map(|_| *b"abcXYZ019.-_".choose(rng).unwrap() as char)
            .collect::<String>()
    };
    PlatformType::from_fields([field(rng), field(rng), field(rng), field(rng), field(rng)]).unwrap()
}

/// Costs uniformly drawn from `costs`, overhead from `overhead`.
pub fn perf(
    rng: &mut impl Rng,
    platform: PlatformType,
    costs: std::ops::RangeInclusive<u64>,
    overhead: std::ops::RangeInclusive<u64>,
) -> PerfData {
    let overhead = rng.gen_range(overhead);
    let table: Vec<u64> = Opcode::ALL.iter().map(|_| rng.gen_range(costs.clone())).collect();
    PerfData::new(platform, overhead, |op| table[op.ordinal()]).unwrap()
}

fn width(rng: &mut impl Rng) -> Width {
    *[Width::W1, Width::W2, Width::W4].choose(rng).unwrap()
}

/// An arbitrary valid compiled file, not necessarily produced by the compiler.
pub fn compiled_file(rng: &mut impl Rng) -> CompiledFile {
    let n = rng.gen_range(1..40);
    let mut instrs: Vec<Instruction> = (0..n)
        .map(|_| {
            let op = *Opcode::ALL.choose(rng).unwrap();
            let a: i32 = rng.gen();
            let b: i32 = rng.gen();
            match op {
                Opcode::Halt => Instruction::Halt,
                Opcode::PushConst => Instruction::PushConst(a),
                Opcode::LoadExt => Instruction::LoadExt(width(rng), b),
                Opcode::StoreExt => Instruction::StoreExt(width(rng), b),
                Opcode::LoadLoc => Instruction::LoadLoc(width(rng), b),
                Opcode::StoreLoc => Instruction::StoreLoc(width(rng), b),
                Opcode::LoadExtDyn => Instruction::LoadExtDyn(width(rng)),
                Opcode::StoreExtDyn => Instruction::StoreExtDyn(width(rng)),
                Opcode::LoadLocDyn => Instruction::LoadLocDyn(width(rng)),
                Opcode::StoreLocDyn => Instruction::StoreLocDyn(width(rng)),
                Opcode::Add => Instruction::Add,
                Opcode::Sub => Instruction::Sub,
                Opcode::Mul => Instruction::Mul,
                Opcode::Div => Instruction::Div,
                Opcode::Neg => Instruction::Neg,
                Opcode::And => Instruction::And,
                Opcode::Or => Instruction::Or,
                Opcode::Not => Instruction::Not,
                Opcode::CmpEq => Instruction::CmpEq,
                Opcode::CmpNe => Instruction::CmpNe,
                Opcode::CmpLt => Instruction::CmpLt,
                Opcode::CmpLe => Instruction::CmpLe,
                Opcode::CmpGt => Instruction::CmpGt,
                Opcode::CmpGe => Instruction::CmpGe,
                Opcode::Jump => Instruction::Jump(0),
                Opcode::JumpIfFalse => Instruction::JumpIfFalse(0),
                Opcode::BoundsCheck => Instruction::BoundsCheck { lo: a, hi: b },
            }
        })
        .collect();
    let mut starts = Vec::with_capacity(n + 1);
    let mut pos = 0i32;
    for i in &instrs {
        starts.push(pos);
        pos += i.encoded_len() as i32;
    }
    starts.push(pos);
    for i in instrs.iter_mut() {
        let t = *starts.choose(rng).unwrap();
        match i {
            Instruction::Jump(x) | Instruction::JumpIfFalse(x) => *x = t,
            _ => {}
        }
    }
    let code = MacroCode::new(instrs).expect("targets are instruction starts");

    let mut table: Vec<WcetEntry> = Vec::new();
    for _ in 0..rng.gen_range(0..5) {
        let p = platform(rng);
        if table.iter().all(|e| e.platform != p) {
            table.push(WcetEntry {
                platform: p,
                wcet: rng.gen(),
            });
        }
    }
    let version: String = (0..rng.gen_range(0..12)).map(|_| rng.gen_range('!'..='~')).collect();
    CompiledFile::new(&version, code, rng.gen(), rng.gen(), table).unwrap()
}
