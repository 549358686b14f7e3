//! Compiled file (`.mcf`) encoding.
//!
//! All integers little-endian; strings are a `u16` byte count followed by UTF-8.
//!
//! ```text
//! magic               4   "MCF\0"
//! format_version      u16
//! compiler_type       str
//! compiler_version    str
//! macro_code_length   u32
//! external_var_size   u32
//! local_var_size      u32
//! platform_type_count u16
//! content_checksum    u32  CRC-32 of everything after the header
//! macro_code          macro_code_length bytes
//! platform entries    platform_type_count x (5 x str, wcet u64)
//! ```

use thiserror::Error;

use crate::compiler::{CompiledFile, Header, WcetEntry, COMPILER_TYPE, FORMAT_VERSION};
use crate::isa::{DecodeError, MacroCode};
use crate::perfdata::{valid_field, PlatformType};

pub const MAGIC: [u8; 4] = *b"MCF\0";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BinError {
    #[error("bad magic number")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedFormatVersion(u16),
    #[error("unsupported compiler type `{0}`")]
    UnsupportedCompiler(String),
    #[error("checksum mismatch: header says {expected:#010x}, content has {actual:#010x}")]
    ChecksumMismatch { expected: u32, actual: u32 },
    #[error("truncated file")]
    Truncated,
    #[error("inconsistent header: {0}")]
    InconsistentHeader(String),
    #[error("invalid macro-code: {0}")]
    InvalidMacroCode(#[from] DecodeError),
    #[error("string field is not valid UTF-8")]
    MalformedString,
    #[error("value of `{0}` does not fit its field")]
    FieldOverflow(&'static str),
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], BinError> {
        let end = self.pos.checked_add(n).ok_or(BinError::Truncated)?;
        let s = self.bytes.get(self.pos..end).ok_or(BinError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, BinError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, BinError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, BinError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, BinError> {
        let n = self.u16()? as usize;
        let raw = self.take(n)?;
        std::str::from_utf8(raw)
            .map(str::to_string)
            .map_err(|_| BinError::MalformedString)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str, field: &'static str) -> Result<(), BinError> {
    let n = u16::try_from(s.len()).map_err(|_| BinError::FieldOverflow(field))?;
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn encode_table(table: &[WcetEntry]) -> Result<Vec<u8>, BinError> {
    let mut out = Vec::new();
    for e in table {
        for f in e.platform.fields() {
            put_str(&mut out, f, "platform field")?;
        }
        out.extend_from_slice(&e.wcet.to_le_bytes());
    }
    Ok(out)
}

/// CRC-32 (reflected, polynomial 0xEDB88320) over the macro-code and the encoded table.
pub fn content_checksum(code: &[u8], table: &[WcetEntry]) -> Result<u32, BinError> {
    let mut h = crc32fast::Hasher::new();
    h.update(code);
    h.update(&encode_table(table)?);
    Ok(h.finalize())
}

pub fn serialize(cf: &CompiledFile) -> Result<Vec<u8>, BinError> {
    let h = &cf.header;
    let mut out = Vec::with_capacity(64 + h.macro_code_length as usize);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&h.format_version.to_le_bytes());
    put_str(&mut out, &h.compiler_type, "compiler_type")?;
    put_str(&mut out, &h.compiler_version, "compiler_version")?;
    out.extend_from_slice(&h.macro_code_length.to_le_bytes());
    out.extend_from_slice(&h.external_var_size.to_le_bytes());
    out.extend_from_slice(&h.local_var_size.to_le_bytes());
    out.extend_from_slice(&h.platform_type_count.to_le_bytes());
    out.extend_from_slice(&h.content_checksum.to_le_bytes());
    out.extend_from_slice(&cf.macro_code.encode());
    out.extend_from_slice(&encode_table(&cf.wcet_table)?);
    Ok(out)
}

fn read_header(r: &mut Reader<'_>) -> Result<Header, BinError> {
    if r.bytes.len() < MAGIC.len() {
        return Err(BinError::Truncated);
    }
    if r.take(4)? != MAGIC {
        return Err(BinError::BadMagic);
    }
    let format_version = r.u16()?;
    if format_version != FORMAT_VERSION {
        return Err(BinError::UnsupportedFormatVersion(format_version));
    }
    let compiler_type = r.str()?;
    if compiler_type != COMPILER_TYPE {
        return Err(BinError::UnsupportedCompiler(compiler_type));
    }
    Ok(Header {
        format_version,
        compiler_type,
        compiler_version: r.str()?,
        macro_code_length: r.u32()?,
        external_var_size: r.u32()?,
        local_var_size: r.u32()?,
        platform_type_count: r.u16()?,
        content_checksum: r.u32()?,
    })
}

/// Parses only the header; the body may be missing.
pub fn parse_header_only(bytes: &[u8]) -> Result<Header, BinError> {
    read_header(&mut Reader { bytes, pos: 0 })
}

/// Parses and fully validates a compiled file.
pub fn deserialize(bytes: &[u8]) -> Result<CompiledFile, BinError> {
    let mut r = Reader { bytes, pos: 0 };
    let header = read_header(&mut r)?;
    let body_start = r.pos;
    let code_bytes = r.take(header.macro_code_length as usize)?;

    let mut wcet_table = Vec::with_capacity(header.platform_type_count as usize);
    for _ in 0..header.platform_type_count {
        let fields = [r.str()?, r.str()?, r.str()?, r.str()?, r.str()?];
        if !fields.iter().all(|f| valid_field(f)) {
            return Err(BinError::InconsistentHeader("invalid platform field".into()));
        }
        let platform = PlatformType::from_fields(fields).map_err(|e| BinError::InconsistentHeader(e.to_string()))?;
        wcet_table.push(WcetEntry {
            platform,
            wcet: r.u64()?,
        });
    }
    if r.pos != bytes.len() {
        return Err(BinError::InconsistentHeader(format!(
            "{} trailing bytes after the platform table",
            bytes.len() - r.pos
        )));
    }

    let actual = crc32fast::hash(&bytes[body_start..]);
    if actual != header.content_checksum {
        return Err(BinError::ChecksumMismatch {
            expected: header.content_checksum,
            actual,
        });
    }

    let macro_code = MacroCode::decode(code_bytes)?;
    for (i, e) in wcet_table.iter().enumerate() {
        if wcet_table[..i].iter().any(|o| o.platform == e.platform) {
            return Err(BinError::InconsistentHeader(format!(
                "platform {} listed twice",
                e.platform
            )));
        }
    }
    Ok(CompiledFile {
        header,
        macro_code,
        wcet_table,
    })
}
