//! `report`: render an HTML gallery, one grid per query with a row per
//! algorithm (seed-shuffled order to offset presentation bias) and a column
//! per retrieved item.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::PathBuf;

use clap::Args;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde_json::{json, Value};

use outfit_core::io::atomic_write;

use crate::artifacts::RetrievalFile;
use crate::config::{defaults, resolve, resolve_opt_path, resolve_path, PipelineConfig};
use crate::error::{require_exists, CliError, CliResult};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Ranked lists per algorithm, as name=path. Repeatable.
    #[arg(long, required = true)]
    pub ranked: Vec<String>,

    /// HTML file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Inventory manifest mapping item ids to image paths.
    #[arg(long)]
    pub inventory_manifest: Option<PathBuf>,

    #[arg(long, env = "OUTFIT_IMAGES_ROOT")]
    pub images_root: Option<PathBuf>,

    /// Seed for the per-query row shuffle; recorded in the output.
    #[arg(long, env = "OUTFIT_SEED")]
    pub seed: Option<u64>,

    /// Columns per row.
    #[arg(long, env = "OUTFIT_TOPK")]
    pub topk: Option<usize>,
}

/// Item id -> image path, parsed leniently from a line-oriented JSON
/// manifest.
fn image_paths(path: &PathBuf) -> CliResult<HashMap<String, String>> {
    require_exists(path)?;
    let file = File::open(path)
        .map_err(|e| CliError::Data(format!("failed to open {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| CliError::Data(format!("read error: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(value) = serde_json::from_str::<Value>(&line) {
            if let (Some(id), Some(image_path)) = (
                value.get("id").and_then(Value::as_str),
                value.get("image_path").and_then(Value::as_str),
            ) {
                map.insert(id.to_string(), image_path.to_string());
            }
        }
    }
    Ok(map)
}

pub fn run(cfg: &PipelineConfig, args: ReportArgs) -> CliResult<Value> {
    let out = resolve_path(args.out.clone(), cfg.paths.output.as_ref(), "out", "output")?;
    let seed = resolve(args.seed, cfg.params.seed, defaults::SEED);
    let topk = resolve(args.topk, cfg.params.topk, defaults::TOPK);
    let images_root = resolve_opt_path(args.images_root.clone(), cfg.paths.images_root.as_ref());

    let mut algorithms: Vec<(String, RetrievalFile)> = Vec::new();
    for pair in &args.ranked {
        let (name, path) = pair.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--ranked expects name=path, got {pair:?}"))
        })?;
        let path = PathBuf::from(path);
        require_exists(&path)?;
        algorithms.push((name.to_string(), RetrievalFile::load(&path)?));
    }

    let id_to_path = match &args.inventory_manifest {
        Some(path) => image_paths(path)?,
        None => HashMap::new(),
    };

    // Ordered union of query ids, first-seen across algorithms.
    let mut queries: Vec<String> = Vec::new();
    for (_, file) in &algorithms {
        for list in &file.lists {
            if !queries.contains(&list.query_id) {
                queries.push(list.query_id.clone());
            }
        }
    }

    let mut missing_images = 0usize;
    let mut html = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Retrieval gallery</title>\n",
    );
    html.push_str(&format!("<meta name=\"row-order-seed\" content=\"{seed}\">\n"));
    html.push_str(
        "<style>body{font-family:sans-serif}table{border-collapse:collapse;margin:1.5em 0}\
         td,th{border:1px solid #bbb;padding:4px;text-align:center;vertical-align:middle}\
         th{background:#eee}img{max-width:96px;max-height:128px;display:block;margin:auto}\
         .missing{width:96px;height:128px;background:#ddd;color:#666;display:flex;\
         align-items:center;justify-content:center;font-size:10px}</style></head><body>\n",
    );
    html.push_str(&format!("<!-- row-order-seed: {seed} -->\n"));
    html.push_str("<h1>Retrieval gallery</h1>\n");
    html.push_str(&format!(
        "<p>{} queries &middot; {} algorithms &middot; top-{topk} &middot; row order seed {seed}</p>\n",
        queries.len(),
        algorithms.len()
    ));

    for (qi, query_id) in queries.iter().enumerate() {
        html.push_str(&format!("<h2>Query {query_id}</h2>\n<table>\n"));
        let mut row_order: Vec<usize> = (0..algorithms.len()).collect();
        let mut rng = StdRng::seed_from_u64(seed.wrapping_add(qi as u64));
        row_order.shuffle(&mut rng);

        for &ai in &row_order {
            let (name, file) = &algorithms[ai];
            let Some(list) = file.lists.iter().find(|l| &l.query_id == query_id) else {
                continue;
            };
            html.push_str(&format!("<tr><th>{name}</th>"));
            for entry in list.entries.iter().take(topk) {
                let cell = id_to_path
                    .get(&entry.item_id)
                    .map(|rel| match &images_root {
                        Some(root) => root.join(rel),
                        None => PathBuf::from(rel),
                    })
                    .filter(|p| p.exists());
                match cell {
                    Some(path) => html.push_str(&format!(
                        "<td><img src=\"{}\" alt=\"{}\"></td>",
                        path.display(),
                        entry.item_id
                    )),
                    None => {
                        missing_images += 1;
                        html.push_str(&format!(
                            "<td><div class=\"missing\">{}</div></td>",
                            entry.item_id
                        ));
                    }
                }
            }
            html.push_str("</tr>\n");
        }
        html.push_str("</table>\n");
    }
    html.push_str("</body></html>\n");
    atomic_write(&out, html.as_bytes())?;

    if missing_images > 0 {
        log::warn!("{missing_images} retrieval tiles have no image; placeholders rendered");
    }
    Ok(json!({
        "command": "report",
        "status": "ok",
        "queries": queries.len(),
        "algorithms": algorithms.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
        "row_order_seed": seed,
        "missing_images": missing_images,
        "output": out,
    }))
}
