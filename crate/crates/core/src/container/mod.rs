//! Container runtime: validates compiled files against the platform and the
//! resources granted by the calling application, then interprets macro-code
//! inside its memory and time partition.
//!
//! Initialization runs its checks in a fixed order and reports the first
//! failure; nothing in the container changes unless every check passes.
//! Execution is metered by fuel equal to the declared WCET minus the
//! request overhead, and the interpreter can only reach the context's local
//! region and its external region.

mod memory;

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use thiserror::Error;

pub use memory::{AppMemory, ExternalRegion, RegionError};

use crate::binfmt::{self, BinError};
use crate::isa::{CostTable, Machine, MacroCode, TrapCode, STACK_DEPTH};
use crate::perfdata::PerfData;

/// Bytes charged per context for the operand stack.
pub const STACK_RESERVE: u64 = (STACK_DEPTH * 4) as u64;

#[derive(Debug, Clone)]
pub struct ContainerConfig {
    /// The platform this container runs on.
    pub platform: PerfData,
    /// Bytes available for macro-code, local variables and stacks.
    pub memory_budget: u64,
    pub max_platform_types: u16,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("memory budget must be positive")]
    ZeroBudget,
    #[error("at least one platform type must be allowed")]
    ZeroPlatformTypes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContextId(pub u64);

impl fmt::Display for ContextId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Parameters of a macro-code initialization request.
#[derive(Debug, Clone)]
pub struct InitRequest<'a> {
    /// The stored compiled file.
    pub compiled_file: &'a [u8],
    pub external_region: ExternalRegion,
    pub allocated_time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MemoryFault {
    Budget { required: u64, available: u64 },
    RegionSize { declared: u32, provided: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InitError {
    #[error("ERR_FILE_PARSE: {0}")]
    FileParse(BinError),
    #[error("ERR_MEMORY: {0:?}")]
    Memory(MemoryFault),
    #[error("ERR_TOO_MANY_PLATFORMS: {count} > {max}")]
    TooManyPlatforms { count: u16, max: u16 },
    #[error("ERR_INCOMPATIBLE_PLATFORM: {0} not in the file's platform table")]
    IncompatiblePlatform(String),
    #[error("ERR_WCET_EXCEEDS_ALLOCATION: {wcet} > {allocated}")]
    WcetExceedsAllocation { wcet: u64, allocated: u64 },
}

impl InitError {
    pub fn code(&self) -> &'static str {
        match self {
            InitError::FileParse(_) => "ERR_FILE_PARSE",
            InitError::Memory(_) => "ERR_MEMORY",
            InitError::TooManyPlatforms { .. } => "ERR_TOO_MANY_PLATFORMS",
            InitError::IncompatiblePlatform(_) => "ERR_INCOMPATIBLE_PLATFORM",
            InitError::WcetExceedsAllocation { .. } => "ERR_WCET_EXCEEDS_ALLOCATION",
        }
    }
}

/// Initialization response: a context id, or the first failed check.
pub type InitResponse = Result<ContextId, InitError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecRequest {
    pub context_id: ContextId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExecStatus {
    Ok,
    Trap(TrapCode),
    UnknownContext,
}

impl ExecStatus {
    pub fn code(&self) -> &'static str {
        match self {
            ExecStatus::Ok => "OK",
            ExecStatus::Trap(t) => t.as_str(),
            ExecStatus::UnknownContext => "UNKNOWN_CONTEXT",
        }
    }
}

impl fmt::Display for ExecStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecResponse {
    pub status: ExecStatus,
    pub fuel_consumed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("UNKNOWN_CONTEXT")]
pub struct UnknownContext;

#[derive(Debug)]
struct MacroContext {
    code: MacroCode,
    locals: Vec<u8>,
    region: ExternalRegion,
    wcet: u64,
    allocated_time: u64,
    footprint: u64,
}

#[derive(Debug)]
pub struct Container {
    config: ContainerConfig,
    costs: CostTable,
    contexts: BTreeMap<ContextId, MacroContext>,
    committed: u64,
    next_id: u64,
}

impl Container {
    pub fn new(config: ContainerConfig) -> Result<Self, ConfigError> {
        if config.memory_budget == 0 {
            return Err(ConfigError::ZeroBudget);
        }
        if config.max_platform_types == 0 {
            return Err(ConfigError::ZeroPlatformTypes);
        }
        Ok(Container {
            costs: config.platform.cost_table(),
            config,
            contexts: BTreeMap::new(),
            committed: 0,
            next_id: 1,
        })
    }

    pub fn config(&self) -> &ContainerConfig {
        &self.config
    }

    pub fn platform_identity(&self) -> String {
        self.config.platform.identity()
    }

    pub fn remaining_budget(&self) -> u64 {
        self.config.memory_budget - self.committed
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    /// The local variable region of a live context.
    pub fn context_locals(&self, id: ContextId) -> Option<&[u8]> {
        self.contexts.get(&id).map(|c| c.locals.as_slice())
    }

    /// Declared WCET and allocated time of a live context.
    pub fn context_timing(&self, id: ContextId) -> Option<(u64, u64)> {
        self.contexts.get(&id).map(|c| (c.wcet, c.allocated_time))
    }

    /// Hash over everything observable about the container's own state.
    pub fn state_digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.committed.hash(&mut h);
        self.next_id.hash(&mut h);
        for (id, c) in &self.contexts {
            id.hash(&mut h);
            c.code.hash(&mut h);
            c.locals.hash(&mut h);
            (c.region.start(), c.region.end()).hash(&mut h);
            (c.wcet, c.allocated_time, c.footprint).hash(&mut h);
        }
        h.finish()
    }

    /// Runs the initialization checks in order and creates a context.
    pub fn initialize(&mut self, req: InitRequest<'_>) -> InitResponse {
        // Header parsing
        let header = binfmt::parse_header_only(req.compiled_file).map_err(InitError::FileParse)?;

        // Memory check
        let required = header.macro_code_length as u64 + header.local_var_size as u64 + STACK_RESERVE;
        let available = self.remaining_budget();
        if required > available {
            return Err(InitError::Memory(MemoryFault::Budget { required, available }));
        }
        if header.external_var_size as usize != req.external_region.len() {
            return Err(InitError::Memory(MemoryFault::RegionSize {
                declared: header.external_var_size,
                provided: req.external_region.len(),
            }));
        }

        // Macro-code load: decoding copies the code out of the stored file.
        let file = binfmt::deserialize(req.compiled_file).map_err(InitError::FileParse)?;

        // Initialization WCET check
        if header.platform_type_count > self.config.max_platform_types {
            return Err(InitError::TooManyPlatforms {
                count: header.platform_type_count,
                max: self.config.max_platform_types,
            });
        }

        // Compatibility check
        let wcet = file
            .wcet_for(&self.config.platform.platform)
            .ok_or_else(|| InitError::IncompatiblePlatform(self.platform_identity()))?;

        // Execution WCET check
        if wcet > req.allocated_time {
            return Err(InitError::WcetExceedsAllocation {
                wcet,
                allocated: req.allocated_time,
            });
        }

        // Macro-code context creation
        let id = ContextId(self.next_id);
        self.next_id += 1;
        self.committed += required;
        self.contexts.insert(
            id,
            MacroContext {
                code: file.macro_code,
                locals: vec![0; header.local_var_size as usize],
                region: req.external_region,
                wcet,
                allocated_time: req.allocated_time,
                footprint: required,
            },
        );
        Ok(id)
    }

    /// Interprets a context's macro-code once.
    pub fn execute(&mut self, req: ExecRequest) -> ExecResponse {
        let Some(ctx) = self.contexts.get_mut(&req.context_id) else {
            return ExecResponse {
                status: ExecStatus::UnknownContext,
                fuel_consumed: 0,
            };
        };
        let fuel = ctx.wcet.saturating_sub(self.config.platform.request_overhead);
        let costs = &self.costs;
        let MacroContext {
            code, locals, region, ..
        } = ctx;
        region.with_bytes_mut(|externals| {
            let mut machine = Machine::new(locals, externals, fuel);
            match machine.run(code, costs) {
                Ok(stats) => ExecResponse {
                    status: ExecStatus::Ok,
                    fuel_consumed: stats.fuel_consumed,
                },
                Err((trap, stats)) => ExecResponse {
                    status: ExecStatus::Trap(trap.code),
                    fuel_consumed: stats.fuel_consumed,
                },
            }
        })
    }

    /// Removes a context and returns its memory to the budget.
    pub fn release(&mut self, id: ContextId) -> Result<(), UnknownContext> {
        let ctx = self.contexts.remove(&id).ok_or(UnknownContext)?;
        self.committed -= ctx.footprint;
        Ok(())
    }
}
