//! Pipeline artifact formats beyond the ones owned by the core library:
//! transformed-query files and retrieval files, plus image loading and
//! descriptor-cache helpers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use outfit_core::features::{PartDescriptor, Region};
use outfit_core::index::RankedList;
use outfit_core::io::{atomic_write, DescriptorRecord};
use outfit_core::recommenders::QueryClass;

use crate::error::{CliError, CliResult};

pub const QUERY_FILE_VERSION: u32 = 1;
pub const RETRIEVAL_FILE_VERSION: u32 = 1;

/// Output of `recommend`: one or more transformed descriptors for a query
/// image with one hidden part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryFile {
    pub version: u32,
    pub query_id: String,
    pub hidden_part: String,
    pub model_kind: String,
    pub descriptors: Vec<PartDescriptor>,
    /// Winning codewords, for codebook-based models.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codewords: Option<Vec<usize>>,
    /// Solid/pattern class, for the hybrid router.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<QueryClass>,
}

impl QueryFile {
    pub fn save(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_vec_pretty(self)
            .map_err(|e| CliError::Data(format!("failed to encode query file: {e}")))?;
        atomic_write(path, &json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
        let file: QueryFile = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Data(format!("malformed query file {}: {e}", path.display())))?;
        if file.version != QUERY_FILE_VERSION {
            return Err(CliError::Data(format!(
                "unsupported query file version {}",
                file.version
            )));
        }
        if file.descriptors.is_empty() {
            return Err(CliError::Data(format!(
                "query file {} has no descriptors",
                path.display()
            )));
        }
        Ok(file)
    }
}

/// Output of `retrieve`: ranked lists under one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalFile {
    pub version: u32,
    pub metric: String,
    pub topk: usize,
    pub lists: Vec<RankedList>,
}

impl RetrievalFile {
    pub fn save(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_vec_pretty(self)
            .map_err(|e| CliError::Data(format!("failed to encode retrieval file: {e}")))?;
        atomic_write(path, &json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| io_error(path, e))?;
        let file: RetrievalFile = serde_json::from_slice(&bytes).map_err(|e| {
            CliError::Data(format!("malformed retrieval file {}: {e}", path.display()))
        })?;
        if file.version != RETRIEVAL_FILE_VERSION {
            return Err(CliError::Data(format!(
                "unsupported retrieval file version {}",
                file.version
            )));
        }
        Ok(file)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    if e.kind() == std::io::ErrorKind::NotFound {
        CliError::MissingArtifact(path.to_path_buf())
    } else {
        CliError::Data(format!("failed to read {}: {e}", path.display()))
    }
}

/// Decode an image file into an HSV region.
pub fn load_image_region(path: &Path) -> CliResult<Region> {
    let img = image::open(path)
        .map_err(|e| CliError::Data(format!("failed to decode {}: {e}", path.display())))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Region::from_rgb8(w as usize, h as usize, img.as_raw())?)
}

/// Group cache records into per-image part maps: `image_id -> part_name ->
/// descriptor`. Later duplicates overwrite earlier ones.
pub fn descriptor_map(
    records: Vec<DescriptorRecord>,
) -> BTreeMap<String, BTreeMap<String, PartDescriptor>> {
    let mut map: BTreeMap<String, BTreeMap<String, PartDescriptor>> = BTreeMap::new();
    for r in records {
        map.entry(r.image_id).or_default().insert(r.part_name, r.descriptor);
    }
    map
}

/// FNV-1a over a string; used to derive stable per-record seeds.
pub fn stable_hash(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
