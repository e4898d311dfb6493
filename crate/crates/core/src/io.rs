//! File plumbing shared by the pipeline: atomic writes and the descriptor
//! cache.
//!
//! The descriptor cache is line-oriented JSON keyed by `(image_id,
//! part_name)`.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::PartDescriptor;

/// Write via a temp file in the same directory plus rename, so interrupted
/// runs never leave a partially written artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir),
        None => tempfile::NamedTempFile::new(),
    }
    .map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path)
        .map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// One descriptor cache line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorRecord {
    pub image_id: String,
    pub part_name: String,
    pub descriptor: PartDescriptor,
}

pub fn write_descriptor_cache(path: &Path, records: &[DescriptorRecord]) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?;
        buf.push(b'\n');
    }
    atomic_write(path, &buf)
}

pub fn read_descriptor_cache(path: &Path) -> Result<Vec<DescriptorRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DescriptorRecord = serde_json::from_str(&line).map_err(|e| Error::Json {
            path: path.into(),
            source: e,
        })?;
        records.push(record);
    }
    Ok(records)
}
