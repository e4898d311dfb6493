//! `featurize`: compute per-part descriptors for every record and write the
//! descriptor cache.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::{json, Value};

use outfit_core::corpus;
use outfit_core::features::{bow_descriptor, hsv_histogram, Codebook, HsvLayout};
use outfit_core::io::{write_descriptor_cache, DescriptorRecord};

use crate::artifacts::{load_image_region, stable_hash};
use crate::config::{defaults, resolve, resolve_opt_path, resolve_path, PipelineConfig};
use crate::error::{require_exists, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Feature {
    /// 40-dim HSV histogram (24/8/8 bins).
    Hsv,
    /// Color bag-of-words over a patch codebook.
    Bow,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Cleaned records artifact.
    #[arg(long, env = "OUTFIT_RECORDS")]
    pub records: Option<PathBuf>,

    /// Directory that image paths are relative to.
    #[arg(long, env = "OUTFIT_IMAGES_ROOT")]
    pub images_root: Option<PathBuf>,

    /// Descriptor cache to write.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "hsv")]
    pub feature: Feature,

    /// Patch codebook (required for --feature bow).
    #[arg(long, env = "OUTFIT_CODEBOOK")]
    pub codebook: Option<PathBuf>,

    /// Patches sampled per part for bag-of-words.
    #[arg(long)]
    pub patches: Option<usize>,

    #[arg(long, env = "OUTFIT_SEED")]
    pub seed: Option<u64>,

    #[arg(long, value_delimiter = ',')]
    pub parts: Option<Vec<String>>,
}

pub fn run(cfg: &PipelineConfig, args: FeaturizeArgs) -> CliResult<Value> {
    let records_path = resolve_path(
        args.records,
        cfg.paths.records.as_ref(),
        "records",
        "records",
    )?;
    let out = resolve_path(args.out, cfg.paths.descriptors.as_ref(), "out", "descriptors")?;
    require_exists(&records_path)?;
    let images_root = resolve_opt_path(args.images_root, cfg.paths.images_root.as_ref())
        .unwrap_or_else(|| PathBuf::from("."));
    let schema = cfg.part_schema(args.parts.as_ref())?;
    let seed = resolve(args.seed, cfg.params.seed, defaults::SEED);
    let patches = resolve(args.patches, cfg.params.patches, defaults::PATCHES);

    let patch_codebook = match args.feature {
        Feature::Hsv => None,
        Feature::Bow => {
            let path = resolve_path(
                args.codebook,
                cfg.paths.codebook.as_ref(),
                "codebook",
                "codebook",
            )?;
            require_exists(&path)?;
            let cb = Codebook::load(&path)?;
            if cb.dim() != 3 {
                return Err(CliError::Data(format!(
                    "bag-of-words needs a 3-dim patch codebook, got dim {}",
                    cb.dim()
                )));
            }
            Some(cb)
        }
    };

    let report = corpus::ingest(&records_path, &schema)?;
    for err in &report.skipped {
        log::warn!("{}:{} {}", records_path.display(), err.line, err.message);
    }

    let layout = HsvLayout::default();
    let mut cache: Vec<DescriptorRecord> = Vec::new();
    let mut missing_images = 0usize;
    let mut part_failures = 0usize;

    for record in &report.records {
        let image_path = images_root.join(&record.image_path);
        if !image_path.exists() {
            log::warn!("image not found: {}", image_path.display());
            missing_images += 1;
            continue;
        }
        let image = load_image_region(&image_path)?;
        for part in &record.parts {
            let b = part.bbox;
            let region = match image.crop(b.x as usize, b.y as usize, b.w as usize, b.h as usize) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("record {} part {}: {e}", record.id, part.part_name);
                    part_failures += 1;
                    continue;
                }
            };
            let descriptor = match args.feature {
                Feature::Hsv => hsv_histogram(&region, layout),
                Feature::Bow => bow_descriptor(
                    &region,
                    patch_codebook.as_ref().unwrap(),
                    patches,
                    seed ^ stable_hash(&format!("{}/{}", record.id, part.part_name)),
                ),
            };
            match descriptor {
                Ok(d) => cache.push(DescriptorRecord {
                    image_id: record.id.clone(),
                    part_name: part.part_name.clone(),
                    descriptor: d,
                }),
                Err(e) => {
                    log::warn!("record {} part {}: {e}", record.id, part.part_name);
                    part_failures += 1;
                }
            }
        }
    }

    write_descriptor_cache(&out, &cache)?;
    Ok(json!({
        "command": "featurize",
        "status": "ok",
        "feature": match args.feature { Feature::Hsv => "hsv", Feature::Bow => "bow" },
        "records": report.records.len(),
        "descriptors": cache.len(),
        "missing_images": missing_images,
        "part_failures": part_failures,
        "output": out,
    }))
}
