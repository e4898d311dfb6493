//! `evaluate`: aggregate crowd ratings into agreement-filtered scores, with
//! optional solid-retrieval probabilities and agreement distributions.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use clap::Args;
use serde_json::{json, Value};

use outfit_core::eval::{self, AgreementStats};
use outfit_core::features::{HsvLayout, PartDescriptor};
use outfit_core::io::{atomic_write, read_descriptor_cache};
use outfit_core::recommenders::{solid_pattern_classify, QueryClass, DEFAULT_SOLID_THRESHOLD};

use crate::artifacts::RetrievalFile;
use crate::config::{resolve, resolve_path, PipelineConfig};
use crate::error::{require_exists, CliError, CliResult};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Ratings CSV: query_id, rater_id, then one column per algorithm.
    #[arg(long, env = "OUTFIT_RATINGS")]
    pub ratings: Option<PathBuf>,

    /// Scores JSON to write.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Optional HTML report of the score and agreement tables.
    #[arg(long)]
    pub html: Option<PathBuf>,

    /// Optional query class CSV (query_id,class) for agreement
    /// distributions.
    #[arg(long)]
    pub classes: Option<PathBuf>,

    /// Ranked lists per algorithm, as name=path, for solid-retrieval
    /// probabilities.
    #[arg(long)]
    pub ranked: Vec<String>,

    /// Inventory descriptor cache backing the ranked lists.
    #[arg(long, env = "OUTFIT_INVENTORY")]
    pub inventory: Option<PathBuf>,

    /// Solid classifier threshold.
    #[arg(long)]
    pub tau: Option<f64>,
}

fn read_classes(path: &PathBuf) -> CliResult<BTreeMap<String, QueryClass>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::MissingArtifact(path.clone())
        } else {
            CliError::Data(format!("failed to read {}: {e}", path.display()))
        }
    })?;
    let mut classes = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with("query_id")) {
            continue;
        }
        let (query, class) = line.split_once(',').ok_or_else(|| {
            CliError::Data(format!("{}:{}: expected query_id,class", path.display(), i + 1))
        })?;
        let class = match class.trim() {
            "solid" => QueryClass::Solid,
            "patterned" => QueryClass::Patterned,
            other => {
                return Err(CliError::Data(format!(
                    "{}:{}: unknown class {other:?}",
                    path.display(),
                    i + 1
                )))
            }
        };
        classes.insert(query.trim().to_string(), class);
    }
    Ok(classes)
}

fn parse_ranked_pairs(pairs: &[String]) -> CliResult<Vec<(String, PathBuf)>> {
    pairs
        .iter()
        .map(|p| {
            p.split_once('=')
                .map(|(name, path)| (name.to_string(), PathBuf::from(path)))
                .ok_or_else(|| {
                    CliError::Usage(format!("--ranked expects name=path, got {p:?}"))
                })
        })
        .collect()
}

fn solid_probabilities(
    args: &EvaluateArgs,
    cfg: &PipelineConfig,
    table: &outfit_core::eval::RatingsTable,
) -> CliResult<Option<BTreeMap<i8, f64>>> {
    if args.ranked.is_empty() {
        return Ok(None);
    }
    let inventory_path = resolve_path(
        args.inventory.clone(),
        cfg.paths.inventory.as_ref(),
        "inventory",
        "inventory",
    )?;
    require_exists(&inventory_path)?;
    let tau = resolve(args.tau, cfg.params.tau, DEFAULT_SOLID_THRESHOLD);
    let layout = HsvLayout::default();

    let mut item_descriptors: HashMap<String, PartDescriptor> = HashMap::new();
    for r in read_descriptor_cache(&inventory_path)? {
        item_descriptors.entry(r.image_id).or_insert(r.descriptor);
    }

    // algorithm name -> query id -> retrieved descriptors.
    let mut per_algorithm: HashMap<String, HashMap<String, Vec<PartDescriptor>>> = HashMap::new();
    for (name, path) in parse_ranked_pairs(&args.ranked)? {
        require_exists(&path)?;
        let file = RetrievalFile::load(&path)?;
        let mut by_query = HashMap::new();
        for list in file.lists {
            let descriptors: Vec<PartDescriptor> = list
                .entries
                .iter()
                .filter_map(|e| item_descriptors.get(&e.item_id).cloned())
                .collect();
            by_query.insert(list.query_id, descriptors);
        }
        per_algorithm.insert(name, by_query);
    }

    let mut samples: Vec<(i8, Vec<PartDescriptor>)> = Vec::new();
    for record in &table.records {
        for (a, algo) in table.algorithms.iter().enumerate() {
            if let Some(by_query) = per_algorithm.get(algo) {
                if let Some(descriptors) = by_query.get(&record.query_id) {
                    samples.push((record.ratings[a], descriptors.clone()));
                }
            }
        }
    }
    Ok(Some(eval::solid_probability(&samples, |d| {
        solid_pattern_classify(d, layout, tau)
            .map(|c| c == QueryClass::Solid)
            .unwrap_or(false)
    })))
}

fn render_html(
    stats: &AgreementStats,
    report: Option<&eval::AgreementReport>,
    solid: Option<&BTreeMap<i8, f64>>,
) -> String {
    let mut html = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Algorithm scores</title>\n\
         <style>body{font-family:sans-serif}table{border-collapse:collapse;margin:1em 0}\
         td,th{border:1px solid #999;padding:4px 10px;text-align:right}th{background:#eee}</style>\
         </head><body>\n<h1>Algorithm scores</h1>\n",
    );
    html.push_str(&format!(
        "<p>Agreement threshold: {} &middot; contributing confidence: {:.3} &middot; excluded queries: {}</p>\n",
        stats.threshold,
        stats.confidence_total,
        stats.excluded_queries.len()
    ));
    html.push_str("<table><tr><th>algorithm</th><th>raw score</th><th>normalized</th></tr>\n");
    for (i, algo) in stats.algorithms.iter().enumerate() {
        let normalized = stats
            .normalized_scores
            .as_ref()
            .map(|n| format!("{:.3}", n[i]))
            .unwrap_or_else(|| "-".to_string());
        html.push_str(&format!(
            "<tr><td>{algo}</td><td>{:.3}</td><td>{normalized}</td></tr>\n",
            stats.raw_scores[i]
        ));
    }
    html.push_str("</table>\n");

    if let Some(solid) = solid {
        html.push_str("<h2>Probability of solid retrievals by rating</h2>\n<table><tr><th>rating</th><th>p(solid)</th></tr>\n");
        for (rating, p) in solid {
            html.push_str(&format!("<tr><td>{rating}</td><td>{p:.3}</td></tr>\n"));
        }
        html.push_str("</table>\n");
    }

    if let Some(report) = report {
        for (name, class) in [("Solid", &report.solid), ("Patterned", &report.patterned)] {
            html.push_str(&format!(
                "<h2>{name} queries ({})</h2>\n<table><tr><th>retained raters</th><th>queries</th></tr>\n",
                class.queries
            ));
            for (retained, count) in &class.retained_counts {
                html.push_str(&format!("<tr><td>{retained}</td><td>{count}</td></tr>\n"));
            }
            html.push_str("</table>\n<table><tr><th>rating</th><th>votes</th></tr>\n");
            for (rating, count) in &class.rating_values {
                html.push_str(&format!("<tr><td>{rating}</td><td>{count}</td></tr>\n"));
            }
            html.push_str("</table>\n");
        }
    }
    html.push_str("</body></html>\n");
    html
}

pub fn run(cfg: &PipelineConfig, args: EvaluateArgs) -> CliResult<Value> {
    let ratings_path = resolve_path(
        args.ratings.clone(),
        cfg.paths.ratings.as_ref(),
        "ratings",
        "ratings",
    )?;
    let out = resolve_path(args.out.clone(), cfg.paths.output.as_ref(), "out", "output")?;
    require_exists(&ratings_path)?;

    let table = eval::read_ratings_csv(&ratings_path)?;
    let stats = eval::evaluate(&table)?;

    let agreement = match &args.classes {
        Some(path) => {
            let classes = read_classes(path)?;
            Some(eval::agreement_report(&table, &classes)?)
        }
        None => None,
    };
    let solid = solid_probabilities(&args, cfg, &table)?;

    let mut scores = serde_json::to_value(&stats)
        .map_err(|e| CliError::Data(format!("failed to encode scores: {e}")))?;
    let obj = scores.as_object_mut().unwrap();
    if let Some(report) = &agreement {
        obj.insert(
            "agreement_report".into(),
            serde_json::to_value(report)
                .map_err(|e| CliError::Data(format!("failed to encode report: {e}")))?,
        );
    }
    if let Some(solid) = &solid {
        obj.insert(
            "solid_probability".into(),
            serde_json::to_value(solid)
                .map_err(|e| CliError::Data(format!("failed to encode probabilities: {e}")))?,
        );
    }
    atomic_write(
        &out,
        serde_json::to_string_pretty(&scores)
            .map_err(|e| CliError::Data(e.to_string()))?
            .as_bytes(),
    )?;

    if let Some(html_path) = &args.html {
        let html = render_html(&stats, agreement.as_ref(), solid.as_ref());
        atomic_write(html_path, html.as_bytes())?;
    }

    Ok(json!({
        "command": "evaluate",
        "status": "ok",
        "algorithms": stats.algorithms,
        "threshold": stats.threshold,
        "records": table.records.len(),
        "excluded_queries": stats.excluded_queries.len(),
        "normalized_scores": stats.normalized_scores,
        "output": out,
        "html": args.html,
    }))
}
