//! `codebook`: train the shared vector-quantization codebook, either over
//! cached part descriptors or over sampled image patches.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use outfit_core::corpus;
use outfit_core::features::{sample_patches, Codebook, PATCH_SIZE};
use outfit_core::io::read_descriptor_cache;

use crate::artifacts::{load_image_region, stable_hash};
use crate::config::{defaults, resolve, resolve_opt_path, resolve_path, PipelineConfig};
use crate::error::{require_exists, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodebookSource {
    /// Cluster cached part descriptors.
    Descriptors,
    /// Cluster mean-HSV patch vectors sampled from part boxes.
    Patches,
}

#[derive(Debug, Args)]
pub struct CodebookArgs {
    #[arg(long, value_enum, default_value = "descriptors")]
    pub source: CodebookSource,

    /// Descriptor cache (for --source descriptors).
    #[arg(long, env = "OUTFIT_DESCRIPTORS")]
    pub descriptors: Option<PathBuf>,

    /// Records artifact (for --source patches).
    #[arg(long, env = "OUTFIT_RECORDS")]
    pub records: Option<PathBuf>,

    #[arg(long, env = "OUTFIT_IMAGES_ROOT")]
    pub images_root: Option<PathBuf>,

    /// Codebook file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Codebook size K.
    #[arg(long)]
    pub k: Option<usize>,

    #[arg(long, env = "OUTFIT_SEED")]
    pub seed: Option<u64>,

    /// Patches sampled per part box (for --source patches).
    #[arg(long, default_value_t = 50)]
    pub patches_per_part: usize,

    #[arg(long, value_delimiter = ',')]
    pub parts: Option<Vec<String>>,
}

pub fn run(cfg: &PipelineConfig, args: CodebookArgs) -> CliResult<Value> {
    let out = resolve_path(args.out, cfg.paths.codebook.as_ref(), "out", "codebook")?;
    let k = resolve(args.k, cfg.params.k, defaults::K);
    let seed = resolve(args.seed, cfg.params.seed, defaults::SEED);

    let (inputs, source_name) = match args.source {
        CodebookSource::Descriptors => {
            let path = resolve_path(
                args.descriptors,
                cfg.paths.descriptors.as_ref(),
                "descriptors",
                "descriptors",
            )?;
            require_exists(&path)?;
            let cache = read_descriptor_cache(&path)?;
            let inputs: Vec<Vec<f64>> = cache
                .into_iter()
                .map(|r| r.descriptor.values().to_vec())
                .collect();
            (inputs, "descriptors")
        }
        CodebookSource::Patches => {
            let records_path = resolve_path(
                args.records,
                cfg.paths.records.as_ref(),
                "records",
                "records",
            )?;
            require_exists(&records_path)?;
            let images_root = resolve_opt_path(args.images_root, cfg.paths.images_root.as_ref())
                .unwrap_or_else(|| PathBuf::from("."));
            let schema = cfg.part_schema(args.parts.as_ref())?;
            let report = corpus::ingest(&records_path, &schema)?;

            let mut inputs: Vec<Vec<f64>> = Vec::new();
            for record in &report.records {
                let image_path = images_root.join(&record.image_path);
                if !image_path.exists() {
                    log::warn!("image not found: {}", image_path.display());
                    continue;
                }
                let image = load_image_region(&image_path)?;
                for part in &record.parts {
                    let b = part.bbox;
                    let region =
                        match image.crop(b.x as usize, b.y as usize, b.w as usize, b.h as usize) {
                            Ok(r) => r,
                            Err(e) => {
                                log::warn!("record {} part {}: {e}", record.id, part.part_name);
                                continue;
                            }
                        };
                    if region.width() < PATCH_SIZE.0 || region.height() < PATCH_SIZE.1 {
                        log::warn!(
                            "record {} part {}: box smaller than a patch, skipped",
                            record.id,
                            part.part_name
                        );
                        continue;
                    }
                    let patch_seed =
                        seed ^ stable_hash(&format!("{}/{}", record.id, part.part_name));
                    let patches =
                        sample_patches(&region, PATCH_SIZE, args.patches_per_part, patch_seed)?;
                    inputs.extend(patches.into_iter().map(|p| p.to_vec()));
                }
            }
            (inputs, "patches")
        }
    };

    if inputs.is_empty() {
        return Err(CliError::Data("no codebook training inputs found".into()));
    }
    let codebook = Codebook::train(&inputs, k, seed)?;
    codebook.save(&out)?;

    Ok(json!({
        "command": "codebook",
        "status": "ok",
        "source": source_name,
        "inputs": inputs.len(),
        "k": codebook.k(),
        "dim": codebook.dim(),
        "trained_on": codebook.trained_on(),
        "output": out,
    }))
}
