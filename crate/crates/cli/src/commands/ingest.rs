//! `ingest`: parse a manifest, apply the cleanup filters, write the cleaned
//! records artifact.

use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Value};

use outfit_core::corpus;
use outfit_core::io::atomic_write;

use crate::config::{resolve_path, PipelineConfig};
use crate::error::{require_exists, CliError, CliResult};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Line-oriented JSON manifest.
    #[arg(long, env = "OUTFIT_MANIFEST")]
    pub manifest: Option<PathBuf>,

    /// Cleaned records artifact to write.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Part schema, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub parts: Option<Vec<String>>,
}

pub fn run(cfg: &PipelineConfig, args: IngestArgs) -> CliResult<Value> {
    let manifest = resolve_path(
        args.manifest,
        cfg.paths.manifest.as_ref(),
        "manifest",
        "manifest",
    )?;
    let out = resolve_path(args.out, cfg.paths.records.as_ref(), "out", "records")?;
    require_exists(&manifest)?;
    let schema = cfg.part_schema(args.parts.as_ref())?;

    let report = corpus::ingest(&manifest, &schema)?;
    let parsed = report.records.len();
    for err in &report.skipped {
        log::warn!("{}:{} {}", manifest.display(), err.line, err.message);
    }
    let cleaned = corpus::cleanup(report.records);
    let dropped = parsed - cleaned.len();

    let mut buf = Vec::new();
    for record in &cleaned {
        serde_json::to_writer(&mut buf, record)
            .map_err(|e| CliError::Data(format!("failed to encode record: {e}")))?;
        buf.push(b'\n');
    }
    atomic_write(&out, &buf)?;

    Ok(json!({
        "command": "ingest",
        "status": "ok",
        "manifest": manifest,
        "parsed": parsed,
        "skipped": report.skipped.len(),
        "skipped_lines": report.skipped,
        "dropped_by_cleanup": dropped,
        "records_out": cleaned.len(),
        "output": out,
    }))
}
