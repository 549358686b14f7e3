//! The macro-compiler: adaptation source plus a set of performance data files
//! in, one compiled file out.

mod codegen;
mod layout;
mod wcet;

use thiserror::Error;

pub use codegen::{generate_code, CodeRegion, CodegenError, StructureMap};
pub use layout::{layout_declarations, layout_variables, VarSlot, VariableLayout};
pub use wcet::{compute_wcet, WcetError};

use crate::binfmt;
use crate::isa::MacroCode;
use crate::lang::{check_source, FrontendError, TypedProgram};
use crate::par;
use crate::perfdata::{PerfData, PlatformType};

pub const COMPILER_TYPE: &str = "macrocell";
pub const COMPILER_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Header {
    pub format_version: u16,
    pub compiler_type: String,
    pub compiler_version: String,
    pub macro_code_length: u32,
    pub external_var_size: u32,
    pub local_var_size: u32,
    pub platform_type_count: u16,
    pub content_checksum: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WcetEntry {
    pub platform: PlatformType,
    pub wcet: u64,
}

/// Header, macro-code and per-platform WCETs.
///
/// Construct with [`CompiledFile::new`], which derives the header, or
/// [`binfmt::deserialize`]; both guarantee the header matches the contents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompiledFile {
    pub(crate) header: Header,
    pub(crate) macro_code: MacroCode,
    pub(crate) wcet_table: Vec<WcetEntry>,
}

impl CompiledFile {
    pub fn new(
        compiler_version: &str,
        macro_code: MacroCode,
        external_var_size: u32,
        local_var_size: u32,
        wcet_table: Vec<WcetEntry>,
    ) -> Result<Self, binfmt::BinError> {
        let platform_type_count =
            u16::try_from(wcet_table.len()).map_err(|_| binfmt::BinError::FieldOverflow("platform_type_count"))?;
        let header = Header {
            format_version: FORMAT_VERSION,
            compiler_type: COMPILER_TYPE.to_string(),
            compiler_version: compiler_version.to_string(),
            macro_code_length: macro_code.byte_length(),
            external_var_size,
            local_var_size,
            platform_type_count,
            content_checksum: binfmt::content_checksum(&macro_code.encode(), &wcet_table)?,
        };
        Ok(CompiledFile {
            header,
            macro_code,
            wcet_table,
        })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn macro_code(&self) -> &MacroCode {
        &self.macro_code
    }

    pub fn wcet_table(&self) -> &[WcetEntry] {
        &self.wcet_table
    }

    pub fn wcet_for(&self, platform: &PlatformType) -> Option<u64> {
        self.wcet_table.iter().find(|e| &e.platform == platform).map(|e| e.wcet)
    }
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error("WCET for platform {platform}: {source}")]
    Wcet { platform: String, source: WcetError },
    #[error("platform type {0} appears in more than one performance data file")]
    DuplicatePlatformType(String),
    #[error("at least one performance data file is required")]
    EmptyPerfSet,
    #[error(transparent)]
    Format(#[from] binfmt::BinError),
}

/// Everything the compiler produces, including intermediate products.
#[derive(Debug, Clone)]
pub struct Compilation {
    pub program: TypedProgram,
    pub layout: VariableLayout,
    pub structure: StructureMap,
    pub file: CompiledFile,
}

/// WCET of one macro-code on each platform, in input order.
pub fn wcet_table(code: &MacroCode, map: &StructureMap, perfs: &[PerfData]) -> Result<Vec<WcetEntry>, CompileError> {
    par::map(perfs, |perf| {
        compute_wcet(code, map, perf)
            .map(|wcet| WcetEntry {
                platform: perf.platform.clone(),
                wcet,
            })
            .map_err(|source| CompileError::Wcet {
                platform: perf.identity(),
                source,
            })
    })
    .into_iter()
    .collect()
}

pub fn compile_unit(source: &str, perfs: &[PerfData]) -> Result<Compilation, CompileError> {
    if perfs.is_empty() {
        return Err(CompileError::EmptyPerfSet);
    }
    for (i, p) in perfs.iter().enumerate() {
        if perfs[..i].iter().any(|q| q.platform == p.platform) {
            return Err(CompileError::DuplicatePlatformType(p.identity()));
        }
    }
    let program = check_source(source)?;
    let layout = layout_variables(&program);
    let (code, structure) = generate_code(&program, &layout)?;
    let table = wcet_table(&code, &structure, perfs)?;
    let file = CompiledFile::new(COMPILER_VERSION, code, layout.external_total, layout.local_total, table)?;
    Ok(Compilation {
        program,
        layout,
        structure,
        file,
    })
}

/// Compiles `source` for every platform in `perfs`.
pub fn compile(source: &str, perfs: &[PerfData]) -> Result<CompiledFile, CompileError> {
    compile_unit(source, perfs).map(|c| c.file)
}
