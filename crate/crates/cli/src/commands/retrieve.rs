//! `retrieve`: run transformed queries against the inventory descriptor
//! cache and write ranked lists. Multi-descriptor queries (triad, diverse)
//! are merged by interleaving their ranked lists.

use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use serde_json::{json, Value};

use outfit_core::distance::Metric;
use outfit_core::index::{self, interleave, InventoryIndex};
use outfit_core::io::read_descriptor_cache;

use crate::artifacts::{QueryFile, RetrievalFile, RETRIEVAL_FILE_VERSION};
use crate::config::{defaults, resolve, resolve_path, PipelineConfig};
use crate::error::{require_exists, CliError, CliResult};

#[derive(Debug, Args)]
pub struct RetrieveArgs {
    /// Transformed-query file(s) from `recommend`.
    #[arg(long, required = true)]
    pub query: Vec<PathBuf>,

    /// Inventory descriptor cache.
    #[arg(long, env = "OUTFIT_INVENTORY")]
    pub inventory: Option<PathBuf>,

    /// Ranked-list file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, env = "OUTFIT_TOPK")]
    pub topk: Option<usize>,

    #[arg(long, env = "OUTFIT_METRIC")]
    pub metric: Option<String>,

    /// Inventory part name; defaults to each query's hidden part.
    #[arg(long)]
    pub inventory_part: Option<String>,
}

pub fn run(cfg: &PipelineConfig, args: RetrieveArgs) -> CliResult<Value> {
    let inventory_path = resolve_path(
        args.inventory.clone(),
        cfg.paths.inventory.as_ref(),
        "inventory",
        "inventory",
    )?;
    let out = resolve_path(args.out.clone(), cfg.paths.output.as_ref(), "out", "output")?;
    require_exists(&inventory_path)?;
    let topk = resolve(args.topk, cfg.params.topk, defaults::TOPK);
    if topk == 0 {
        return Err(CliError::Usage("--topk must be at least 1".into()));
    }
    let metric_text = args
        .metric
        .clone()
        .or_else(|| cfg.params.metric.clone())
        .unwrap_or_else(|| "l1".to_string());
    let metric = Metric::from_str(&metric_text).map_err(CliError::Usage)?;

    let cache = read_descriptor_cache(&inventory_path)?;
    let mut indices: HashMap<String, InventoryIndex> = HashMap::new();
    let mut lists = Vec::new();

    for query_path in &args.query {
        require_exists(query_path)?;
        let query = QueryFile::load(query_path)?;
        let part = args
            .inventory_part
            .clone()
            .unwrap_or_else(|| query.hidden_part.clone());

        if !indices.contains_key(&part) {
            let items: Vec<(String, _)> = cache
                .iter()
                .filter(|r| r.part_name == part)
                .map(|r| (r.image_id.clone(), r.descriptor.clone()))
                .collect();
            if items.is_empty() {
                return Err(CliError::Data(format!(
                    "inventory {} has no descriptors for part {part:?}",
                    inventory_path.display()
                )));
            }
            indices.insert(part.clone(), index::build(items, metric)?);
        }
        let index = &indices[&part];

        let list = if query.descriptors.len() == 1 {
            index.query(&query.query_id, &query.descriptors[0], topk)?
        } else {
            let per_descriptor: Vec<_> = query
                .descriptors
                .iter()
                .map(|d| index.query(&query.query_id, d, topk))
                .collect::<Result<_, _>>()?;
            interleave(&per_descriptor, topk)
        };
        lists.push(list);
    }

    let file = RetrievalFile {
        version: RETRIEVAL_FILE_VERSION,
        metric: metric_text,
        topk,
        lists,
    };
    file.save(&out)?;

    Ok(json!({
        "command": "retrieve",
        "status": "ok",
        "metric": metric.to_string(),
        "topk": topk,
        "queries": file.lists.len(),
        "output": out,
    }))
}
