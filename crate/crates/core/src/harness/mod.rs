//! Simulated calling application.
//!
//! Owns the external region, maps variable paths such as
//! `calculator[3].criticity` onto packed offsets and drives the
//! init/execute protocol against a [`Container`](crate::container::Container).

mod files;
mod scenario;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use files::{layout_from_text, layout_to_text, parse_vars};
pub use scenario::{
    rack_manager_layout, rack_manager_scenario, run_scenario, Calculator, Message, RackInputs, RackReport, ScenarioRun,
    RACK_SIZE,
};

use crate::compiler::{VarSlot, VariableLayout};
use crate::container::{ExternalRegion, InitError};
use crate::lang::{ElemType, FrontendError, ScalarType, VarType};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("malformed variable path `{0}`")]
    MalformedPath(String),
    #[error("`{0}` does not name a scalar external variable")]
    UnknownPath(String),
    #[error("index {index} of `{path}` is outside the declared range {lo}..{hi}")]
    IndexOutOfDeclaredRange { path: String, index: i32, lo: i32, hi: i32 },
    #[error("{value} does not fit `{path}` of type {ty}")]
    ValueOverflow { path: String, value: i64, ty: &'static str },
    #[error("`{path}` has type {ty}")]
    TypeMismatch { path: String, ty: &'static str },
    #[error("malformed value `{0}`")]
    MalformedValue(String),
    #[error("region of {actual} bytes does not match the {expected} bytes of external variables")]
    RegionSize { expected: u32, actual: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("layout declarations: {0}")]
    LayoutSource(FrontendError),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error("execution ended with {0}")]
    Exec(String),
}

/// `name`, `name[k]`, `name.f` or `name[k].f`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VarPath {
    pub name: String,
    pub index: Option<i32>,
    pub field: Option<String>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl FromStr for VarPath {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::MalformedPath(s.to_string());
        let s_trim = s.trim();
        let (head, field) = match s_trim.rsplit_once('.') {
            Some((h, f)) if !f.contains(']') => (h, Some(f.trim())),
            _ => (s_trim, None),
        };
        let (name, index) = match head.split_once('[') {
            Some((n, rest)) => {
                let k = rest.strip_suffix(']').ok_or_else(bad)?;
                (n.trim(), Some(k.trim().parse::<i32>().map_err(|_| bad())?))
            }
            None => (head.trim(), None),
        };
        if !is_ident(name) || field.is_some_and(|f| !is_ident(f)) {
            return Err(bad());
        }
        Ok(VarPath {
            name: name.to_string(),
            index,
            field: field.map(str::to_string),
        })
    }
}

impl fmt::Display for VarPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if let Some(k) = self.index {
            write!(f, "[{k}]")?;
        }
        if let Some(field) = &self.field {
            write!(f, ".{field}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    Bool(bool),
    Int(i64),
}

impl FromStr for Value {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            t => t
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|_| HarnessError::MalformedValue(s.to_string())),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
        }
    }
}

/// A resolved scalar: byte offset in the region and its type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalarLocation {
    pub offset: u32,
    pub ty: ScalarType,
}

/// Resolves `path` against a list of slots.
pub fn resolve(slots: &[VarSlot], path: &VarPath) -> Result<ScalarLocation, HarnessError> {
    let unknown = || HarnessError::UnknownPath(path.to_string());
    let slot = slots.iter().find(|s| s.name == path.name).ok_or_else(unknown)?;
    let (elem_base, elem): (u32, &ElemType) = match (&slot.ty, path.index) {
        (VarType::Array { elem, lo, hi }, Some(k)) => {
            if k < *lo || k > *hi {
                return Err(HarnessError::IndexOutOfDeclaredRange {
                    path: path.to_string(),
                    index: k,
                    lo: *lo,
                    hi: *hi,
                });
            }
            ((k - lo) as u32 * elem.byte_size(), elem)
        }
        (VarType::Scalar(s), None) if path.field.is_none() => {
            return Ok(ScalarLocation {
                offset: slot.offset,
                ty: *s,
            });
        }
        (VarType::Struct(st), None) => {
            let field = path.field.as_deref().ok_or_else(unknown)?;
            let (_, off, ty) = st.field(field).ok_or_else(unknown)?;
            return Ok(ScalarLocation {
                offset: slot.offset + off,
                ty,
            });
        }
        _ => return Err(unknown()),
    };
    let (field_off, ty) = match (elem, path.field.as_deref()) {
        (ElemType::Scalar(s), None) => (0, *s),
        (ElemType::Struct(st), Some(f)) => {
            let (_, off, ty) = st.field(f).ok_or_else(unknown)?;
            (off, ty)
        }
        _ => return Err(unknown()),
    };
    Ok(ScalarLocation {
        offset: slot.offset + elem_base + field_off,
        ty,
    })
}

/// Every scalar path of `slots`, in layout order.
pub fn scalar_paths(slots: &[VarSlot]) -> Vec<VarPath> {
    fn fields_of(elem: &ElemType) -> Vec<Option<String>> {
        match elem {
            ElemType::Scalar(_) => vec![None],
            ElemType::Struct(st) => st.fields.iter().map(|f| Some(f.name.clone())).collect(),
        }
    }
    let mut out = Vec::new();
    for s in slots {
        let path = |index, field| VarPath {
            name: s.name.clone(),
            index,
            field,
        };
        match &s.ty {
            VarType::Scalar(_) => out.push(path(None, None)),
            VarType::Struct(st) => out.extend(
                fields_of(&ElemType::Struct(st.clone()))
                    .into_iter()
                    .map(|f| path(None, f)),
            ),
            VarType::Array { elem, lo, hi } => {
                for k in *lo..=*hi {
                    out.extend(fields_of(elem).into_iter().map(|f| path(Some(k), f)));
                }
            }
        }
    }
    out
}

fn encode(path: &VarPath, ty: ScalarType, value: Value) -> Result<Vec<u8>, HarnessError> {
    match (ty, value) {
        (ScalarType::Bool, Value::Bool(b)) => Ok(vec![b as u8]),
        (ScalarType::Bool, Value::Int(_)) | (_, Value::Bool(_)) => Err(HarnessError::TypeMismatch {
            path: path.to_string(),
            ty: ty.keyword(),
        }),
        (_, Value::Int(v)) => {
            let (min, max) = ty.value_range();
            if v < min || v > max {
                return Err(HarnessError::ValueOverflow {
                    path: path.to_string(),
                    value: v,
                    ty: ty.keyword(),
                });
            }
            Ok((v as i32).to_le_bytes()[..ty.byte_size() as usize].to_vec())
        }
    }
}

fn decode(ty: ScalarType, bytes: &[u8]) -> Value {
    match ty {
        ScalarType::Bool => Value::Bool(bytes[0] != 0),
        ScalarType::Int8 => Value::Int(bytes[0] as i8 as i64),
        ScalarType::Int16 => Value::Int(i16::from_le_bytes([bytes[0], bytes[1]]) as i64),
        ScalarType::Int32 => Value::Int(i32::from_le_bytes(bytes.try_into().unwrap()) as i64),
    }
}

/// The external half of a layout bound to a region of exactly its size.
#[derive(Debug, Clone)]
pub struct ExternalBinding {
    slots: Vec<VarSlot>,
    region: ExternalRegion,
}

impl ExternalBinding {
    pub fn new(layout: &VariableLayout, region: ExternalRegion) -> Result<Self, HarnessError> {
        if region.len() != layout.external_total as usize {
            return Err(HarnessError::RegionSize {
                expected: layout.external_total,
                actual: region.len(),
            });
        }
        Ok(ExternalBinding {
            slots: layout.externals.clone(),
            region,
        })
    }

    /// Binds to a fresh zeroed region.
    pub fn allocate(layout: &VariableLayout) -> Self {
        ExternalBinding {
            slots: layout.externals.clone(),
            region: ExternalRegion::standalone(layout.external_total as usize),
        }
    }

    pub fn region(&self) -> &ExternalRegion {
        &self.region
    }

    pub fn slots(&self) -> &[VarSlot] {
        &self.slots
    }

    pub fn resolve(&self, path: &VarPath) -> Result<ScalarLocation, HarnessError> {
        resolve(&self.slots, path)
    }

    pub fn write_var(&self, path: &VarPath, value: Value) -> Result<(), HarnessError> {
        let loc = self.resolve(path)?;
        let bytes = encode(path, loc.ty, value)?;
        self.region
            .write(loc.offset as usize, &bytes)
            .expect("layout fits the region");
        Ok(())
    }

    pub fn read_var(&self, path: &VarPath) -> Result<Value, HarnessError> {
        let loc = self.resolve(path)?;
        let bytes = self
            .region
            .read(loc.offset as usize, loc.ty.byte_size() as usize)
            .expect("layout fits the region");
        Ok(decode(loc.ty, &bytes))
    }

    /// Every scalar external variable with its current value.
    pub fn dump(&self) -> Vec<(VarPath, Value)> {
        scalar_paths(&self.slots)
            .into_iter()
            .map(|p| {
                let v = self.read_var(&p).expect("enumerated path resolves");
                (p, v)
            })
            .collect()
    }
}
