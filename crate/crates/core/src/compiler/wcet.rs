//! Structural WCET over the code-region tree.

use thiserror::Error;

use super::codegen::{CodeRegion, StructureMap};
use crate::isa::MacroCode;
use crate::perfdata::PerfData;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WcetError {
    #[error("performance data lacks opcode {0}")]
    MissingOpcode(String),
    #[error("WCET does not fit in 64 bits")]
    Overflow,
    #[error("structure map refers to instruction {0} outside the macro-code")]
    BadRange(usize),
}

struct Costing<'a> {
    code: &'a MacroCode,
    perf: &'a PerfData,
}

impl Costing<'_> {
    fn straight(&self, range: &std::ops::Range<usize>) -> Result<u64, WcetError> {
        let instrs = self
            .code
            .instructions()
            .get(range.clone())
            .ok_or(WcetError::BadRange(range.end))?;
        instrs.iter().try_fold(0u64, |acc, i| {
            let op = i.opcode();
            let c = self
                .perf
                .op_cost(op)
                .ok_or_else(|| WcetError::MissingOpcode(op.mnemonic().to_string()))?;
            acc.checked_add(c).ok_or(WcetError::Overflow)
        })
    }

    fn region(&self, r: &CodeRegion) -> Result<u64, WcetError> {
        let add = |a: u64, b: u64| a.checked_add(b).ok_or(WcetError::Overflow);
        match r {
            CodeRegion::Straight(range) => self.straight(range),
            CodeRegion::Seq(parts) => parts.iter().try_fold(0, |acc, p| add(acc, self.region(p)?)),
            CodeRegion::Branch {
                cond,
                then_branch,
                else_branch,
            } => {
                let then_cost = self.region(then_branch)?;
                let else_cost = match else_branch {
                    Some(e) => self.region(e)?,
                    None => 0,
                };
                add(self.straight(cond)?, then_cost.max(else_cost))
            }
            CodeRegion::Loop {
                init,
                test,
                body,
                step,
                trip_count,
            } => {
                let test_cost = self.straight(test)?;
                let iteration = add(add(test_cost, self.region(body)?)?, self.straight(step)?)?;
                let iterations = iteration.checked_mul(*trip_count).ok_or(WcetError::Overflow)?;
                add(add(self.straight(init)?, iterations)?, test_cost)
            }
        }
    }
}

/// Request overhead plus the worst path through the macro-code.
pub fn compute_wcet(code: &MacroCode, map: &StructureMap, perf: &PerfData) -> Result<u64, WcetError> {
    let body = Costing { code, perf }.region(&map.root)?;
    body.checked_add(perf.request_overhead).ok_or(WcetError::Overflow)
}
