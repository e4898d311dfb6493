//! Corpus ingestion, cleanup filters, and train/test splits.
//!
//! Manifests are line-oriented JSON: one record per line with keys `id`,
//! `image_path`, `width`, `height`, `parts` (array of `{part_name,
//! box:[x,y,w,h]}`), `tags`, `user_id`, `brand`. Malformed lines are skipped
//! and reported with their line number; an unreadable file is fatal.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Records shorter than this are dropped by [`cleanup`].
pub const MIN_HEIGHT: u32 = 400;

/// Pixel bounding box of one annotated part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "[u32; 4]", into = "[u32; 4]")]
pub struct BoundingBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl From<[u32; 4]> for BoundingBox {
    fn from([x, y, w, h]: [u32; 4]) -> Self {
        BoundingBox { x, y, w, h }
    }
}

impl From<BoundingBox> for [u32; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartAnnotation {
    pub part_name: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
}

/// One annotated corpus image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub image_path: String,
    pub width: u32,
    pub height: u32,
    pub parts: Vec<PartAnnotation>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub user_id: Option<String>,
    #[serde(default)]
    pub brand: Option<String>,
}

impl ImageRecord {
    /// Annotation for `part_name`, if present.
    pub fn part(&self, part_name: &str) -> Option<&PartAnnotation> {
        self.parts.iter().find(|p| p.part_name == part_name)
    }

    /// True when every part in `schema` is annotated.
    pub fn has_all_parts(&self, schema: &PartSchema) -> bool {
        schema.names().iter().all(|n| self.part(n).is_some())
    }
}

/// Declared set of part names (size P). Annotations outside the schema are
/// rejected at ingest; records are not required to annotate every part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartSchema {
    names: Vec<String>,
}

impl PartSchema {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::InvalidParameter("part schema is empty".into()));
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.clone()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate part name {n:?} in schema"
                )));
            }
        }
        Ok(PartSchema { names })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn position(&self, part_name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == part_name)
    }
}

impl Default for PartSchema {
    fn default() -> Self {
        PartSchema {
            names: vec!["top".to_string(), "bottom".to_string()],
        }
    }
}

/// Train/test split request. Deterministic for a fixed seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

/// A manifest line that failed to parse or validate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Outcome of [`ingest`]: parsed records plus per-line errors.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub records: Vec<ImageRecord>,
    pub skipped: Vec<LineError>,
}

/// Read a line-oriented JSON manifest. Records are returned in file order;
/// lines that fail to parse or violate record invariants are collected in
/// `skipped` with 1-based line numbers. Blank lines are ignored.
pub fn ingest(path: &Path, schema: &PartSchema) -> Result<IngestReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        match serde_json::from_str::<ImageRecord>(&line) {
            Ok(record) => match validate_record(&record, schema) {
                Ok(()) => records.push(record),
                Err(message) => skipped.push(LineError {
                    line: lineno,
                    message,
                }),
            },
            Err(e) => skipped.push(LineError {
                line: lineno,
                message: e.to_string(),
            }),
        }
    }
    Ok(IngestReport { records, skipped })
}

fn validate_record(record: &ImageRecord, schema: &PartSchema) -> std::result::Result<(), String> {
    if record.id.is_empty() {
        return Err("empty id".into());
    }
    if record.width == 0 || record.height == 0 {
        return Err(format!(
            "record {}: width and height must be positive",
            record.id
        ));
    }
    let mut seen = HashSet::new();
    for part in &record.parts {
        if schema.position(&part.part_name).is_none() {
            return Err(format!(
                "record {}: part {:?} is not in the schema",
                record.id, part.part_name
            ));
        }
        if !seen.insert(part.part_name.clone()) {
            return Err(format!(
                "record {}: duplicate part {:?}",
                record.id, part.part_name
            ));
        }
        let b = part.bbox;
        if b.w == 0 || b.h == 0 {
            return Err(format!(
                "record {}: part {:?} has an empty box",
                record.id, part.part_name
            ));
        }
        if b.x.saturating_add(b.w) > record.width || b.y.saturating_add(b.h) > record.height {
            return Err(format!(
                "record {}: part {:?} box exceeds image bounds",
                record.id, part.part_name
            ));
        }
    }
    Ok(())
}

/// Retain records with `height >= 400` and `height / width > 1`. Idempotent.
pub fn cleanup(records: Vec<ImageRecord>) -> Vec<ImageRecord> {
    records
        .into_iter()
        .filter(|r| r.height >= MIN_HEIGHT && r.height > r.width)
        .collect()
}

/// Shuffle the records with the spec's seed and cut off the first `n_train`
/// as the training set and the next `n_test` as the test set.
pub fn split(
    records: &[ImageRecord],
    spec: &SplitSpec,
) -> Result<(Vec<ImageRecord>, Vec<ImageRecord>)> {
    let requested = spec.n_train + spec.n_test;
    if requested > records.len() {
        return Err(Error::SplitTooLarge {
            requested,
            available: records.len(),
        });
    }
    let mut indices: Vec<usize> = (0..records.len()).collect();
    let mut rng = rand::rngs::StdRng::seed_from_u64(spec.seed);
    indices.shuffle(&mut rng);

    let train = indices[..spec.n_train]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    let test = indices[spec.n_train..requested]
        .iter()
        .map(|&i| records[i].clone())
        .collect();
    Ok((train, test))
}
