use std::fmt;
use std::sync::{Arc, Mutex, MutexGuard};

use thiserror::Error;

/// Memory owned by the calling application. Cloning shares the same bytes.
#[derive(Clone, Default)]
pub struct AppMemory(Arc<Mutex<Vec<u8>>>);

impl AppMemory {
    pub fn new(len: usize) -> Self {
        Self::from_bytes(vec![0; len])
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        AppMemory(Arc::new(Mutex::new(bytes)))
    }

    pub fn len(&self) -> usize {
        self.lock().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot(&self) -> Vec<u8> {
        self.lock().clone()
    }

    pub(crate) fn lock(&self) -> MutexGuard<'_, Vec<u8>> {
        self.0.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl fmt::Debug for AppMemory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AppMemory({} bytes)", self.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RegionError {
    #[error("range {start}..{end} is outside the backing memory of {len} bytes")]
    OutsideMemory { start: usize, end: usize, len: usize },
    #[error("access {offset}+{len} is outside the region of {region_len} bytes")]
    OutOfRange {
        offset: usize,
        len: usize,
        region_len: usize,
    },
}

/// The window `[start, end)` of application memory holding the external variables.
#[derive(Clone, Debug)]
pub struct ExternalRegion {
    memory: AppMemory,
    start: usize,
    end: usize,
}

impl ExternalRegion {
    pub fn new(memory: &AppMemory, start: usize, end: usize) -> Result<Self, RegionError> {
        let len = memory.len();
        if start > end || end > len {
            return Err(RegionError::OutsideMemory { start, end, len });
        }
        Ok(ExternalRegion {
            memory: memory.clone(),
            start,
            end,
        })
    }

    /// A fresh zeroed memory exactly the size of the region.
    pub fn standalone(len: usize) -> Self {
        ExternalRegion {
            memory: AppMemory::new(len),
            start: 0,
            end: len,
        }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn memory(&self) -> &AppMemory {
        &self.memory
    }

    fn check(&self, offset: usize, len: usize) -> Result<(), RegionError> {
        match offset.checked_add(len) {
            Some(e) if e <= self.len() => Ok(()),
            _ => Err(RegionError::OutOfRange {
                offset,
                len,
                region_len: self.len(),
            }),
        }
    }

    pub fn read(&self, offset: usize, len: usize) -> Result<Vec<u8>, RegionError> {
        self.check(offset, len)?;
        let mem = self.memory.lock();
        Ok(mem[self.start + offset..self.start + offset + len].to_vec())
    }

    pub fn write(&self, offset: usize, bytes: &[u8]) -> Result<(), RegionError> {
        self.check(offset, bytes.len())?;
        let mut mem = self.memory.lock();
        mem[self.start + offset..self.start + offset + bytes.len()].copy_from_slice(bytes);
        Ok(())
    }

    pub fn to_vec(&self) -> Vec<u8> {
        self.memory.lock()[self.start..self.end].to_vec()
    }

    /// Runs `f` over exactly the region's bytes.
    pub(crate) fn with_bytes_mut<R>(&self, f: impl FnOnce(&mut [u8]) -> R) -> R {
        let mut mem = self.memory.lock();
        f(&mut mem[self.start..self.end])
    }
}
