//! Elementary performance data: one platform type and the worst-case cost of
//! every macro-code opcode on it.
//!
//! File format (`.epd`), one `key = value` per line, `#` starts a comment:
//!
//! ```text
//! platform.hardware_type = CPU-A
//! platform.hardware_version = 1
//! platform.os_type = RTOS
//! platform.os_version = 3
//! platform.container_version = 1.0
//! overhead.request = 50
//! op.HALT = 1
//! op.PUSH_CONST = 2
//! ...
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::isa::{CostTable, Opcode};

/// Hardware, operating system and container versions that together fix the
/// execution time of a macro-code.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlatformType {
    pub hardware_type: String,
    pub hardware_version: String,
    pub os_type: String,
    pub os_version: String,
    pub container_version: String,
}

pub const PLATFORM_KEYS: [&str; 5] = [
    "platform.hardware_type",
    "platform.hardware_version",
    "platform.os_type",
    "platform.os_version",
    "platform.container_version",
];

impl PlatformType {
    pub fn fields(&self) -> [&str; 5] {
        [
            &self.hardware_type,
            &self.hardware_version,
            &self.os_type,
            &self.os_version,
            &self.container_version,
        ]
    }

    /// Builds a platform type, rejecting empty fields and fields containing `/`.
    pub fn from_fields(fields: [String; 5]) -> Result<Self, PerfDataError> {
        for (key, f) in PLATFORM_KEYS.iter().zip(&fields) {
            if f.is_empty() {
                return Err(PerfDataError::MissingPlatformField(key.to_string()));
            }
            if !valid_field(f) {
                return Err(PerfDataError::InvalidPlatformField(key.to_string()));
            }
        }
        let [hardware_type, hardware_version, os_type, os_version, container_version] = fields;
        Ok(PlatformType {
            hardware_type,
            hardware_version,
            os_type,
            os_version,
            container_version,
        })
    }

    /// Parses a canonical identity string back into its fields.
    pub fn parse_identity(s: &str) -> Result<Self, PerfDataError> {
        let parts: Vec<&str> = s.split('/').collect();
        let fields: [String; 5] = parts
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .try_into()
            .map_err(|_| PerfDataError::InvalidPlatformField(s.to_string()))?;
        Self::from_fields(fields)
    }

    /// The five fields joined by `/`.
    pub fn identity(&self) -> String {
        self.fields().join("/")
    }
}

/// Fields are joined with `/` in the identity string, so they may not contain it.
pub fn valid_field(f: &str) -> bool {
    !f.is_empty() && !f.contains('/') && !f.chars().any(char::is_control) && f.trim() == f
}

impl fmt::Display for PlatformType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.identity())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerfData {
    pub platform: PlatformType,
    pub request_overhead: u64,
    op_costs: BTreeMap<Opcode, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerfDataError {
    #[error("missing cost for opcode {0}")]
    MissingOpcode(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("line {0}: malformed value")]
    MalformedValue(usize),
    #[error("missing platform field `{0}`")]
    MissingPlatformField(String),
    #[error("platform field `{0}` must be non-empty, trimmed and free of `/`")]
    InvalidPlatformField(String),
}

impl PerfData {
    /// Builds perf data directly; every opcode must have a positive cost.
    pub fn new(
        platform: PlatformType,
        request_overhead: u64,
        mut cost: impl FnMut(Opcode) -> u64,
    ) -> Result<Self, PerfDataError> {
        let op_costs: BTreeMap<_, _> = Opcode::ALL.iter().map(|&op| (op, cost(op))).collect();
        if let Some((op, _)) = op_costs.iter().find(|(_, &c)| c == 0) {
            return Err(PerfDataError::MissingOpcode(op.mnemonic().to_string()));
        }
        Ok(PerfData {
            platform,
            request_overhead,
            op_costs,
        })
    }

    pub fn op_cost(&self, op: Opcode) -> Option<u64> {
        self.op_costs.get(&op).copied()
    }

    pub fn cost_table(&self) -> CostTable {
        CostTable::from_fn(|op| self.op_costs[&op])
    }

    pub fn identity(&self) -> String {
        self.platform.identity()
    }

    /// Renders the data in the `.epd` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in PLATFORM_KEYS.iter().zip(self.platform.fields()) {
            out.push_str(&format!("{key} = {value}\n"));
        }
        out.push_str(&format!("overhead.request = {}\n", self.request_overhead));
        for &op in Opcode::ALL {
            out.push_str(&format!("op.{} = {}\n", op.mnemonic(), self.op_costs[&op]));
        }
        out
    }
}

pub fn platform_identity(p: &PerfData) -> String {
    p.identity()
}

/// Parses an `.epd` file.
pub fn parse_perf_data(text: &str) -> Result<PerfData, PerfDataError> {
    let mut seen = HashSet::new();
    let mut platform: [Option<String>; 5] = Default::default();
    let mut overhead = None;
    let mut op_costs = BTreeMap::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(PerfDataError::MalformedValue(line_no))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(PerfDataError::DuplicateKey(key.to_string()));
        }
        let number = || value.parse::<u64>().map_err(|_| PerfDataError::MalformedValue(line_no));

        if let Some(slot) = PLATFORM_KEYS.iter().position(|k| *k == key) {
            if value.is_empty() {
                return Err(PerfDataError::MissingPlatformField(key.to_string()));
            }
            if !valid_field(value) {
                return Err(PerfDataError::MalformedValue(line_no));
            }
            platform[slot] = Some(value.to_string());
        } else if key == "overhead.request" {
            overhead = Some(number()?);
        } else if let Some(op) = key.strip_prefix("op.").and_then(Opcode::from_mnemonic) {
            let cost = number()?;
            if cost == 0 {
                return Err(PerfDataError::MalformedValue(line_no));
            }
            op_costs.insert(op, cost);
        } else {
            return Err(PerfDataError::UnknownKey(key.to_string()));
        }
    }

    let mut fields = Vec::with_capacity(5);
    for (key, value) in PLATFORM_KEYS.iter().zip(platform) {
        fields.push(value.ok_or_else(|| PerfDataError::MissingPlatformField(key.to_string()))?);
    }
    let request_overhead = overhead.ok_or_else(|| PerfDataError::MissingPlatformField("overhead.request".into()))?;
    if let Some(op) = Opcode::ALL.iter().find(|op| !op_costs.contains_key(op)) {
        return Err(PerfDataError::MissingOpcode(op.mnemonic().to_string()));
    }
    Ok(PerfData {
        platform: PlatformType::from_fields(fields.try_into().expect("five fields"))?,
        request_overhead,
        op_costs,
    })
}
