//! `train`: fit one of the six recommender kinds and write its model file.
//!
//! PR and TAR are training-free; CNNC stores the training descriptors; GMM
//! and MCL first quantize part descriptors against the shared codebook.
//! Records missing any schema part are excluded from training and reported.

use std::collections::HashSet;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use serde_json::{json, Value};

use outfit_core::corpus::{self, PartSchema, SplitSpec};
use outfit_core::distance::Metric;
use outfit_core::features::{Codebook, HsvLayout};
use outfit_core::io::read_descriptor_cache;
use outfit_core::recommenders::{
    gmm_train, mcl_train, CnncModel, GmmOptions, HybridModel, MclOptions, ModelFile, ModelKind,
    PrConfig, PrMode, TarConfig, TarMode, TrainExample, TrainedModel, DEFAULT_SOLID_THRESHOLD,
};

use crate::artifacts::descriptor_map;
use crate::config::{defaults, resolve, resolve_path, PipelineConfig};
use crate::error::{require_exists, CliError, CliResult};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Model kind: pr, cnnc, gmm, mcl, tar, or hybrid.
    #[arg(long)]
    pub model: String,

    /// Model file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, env = "OUTFIT_DESCRIPTORS")]
    pub descriptors: Option<PathBuf>,

    /// Records artifact; required when splitting.
    #[arg(long, env = "OUTFIT_RECORDS")]
    pub records: Option<PathBuf>,

    /// Shared codebook (gmm, mcl).
    #[arg(long, env = "OUTFIT_CODEBOOK")]
    pub codebook: Option<PathBuf>,

    #[arg(long, value_delimiter = ',')]
    pub parts: Option<Vec<String>>,

    /// CNNC neighborhood size.
    #[arg(long)]
    pub neighbors: Option<usize>,

    /// GMM component count.
    #[arg(long)]
    pub components: Option<usize>,

    /// MCL topic count.
    #[arg(long)]
    pub topics: Option<usize>,

    /// MCL topic prior.
    #[arg(long)]
    pub alpha: Option<f64>,

    /// MCL transition smoothing.
    #[arg(long)]
    pub eta: Option<f64>,

    /// Solid classifier threshold (hybrid).
    #[arg(long)]
    pub tau: Option<f64>,

    #[arg(long, env = "OUTFIT_METRIC")]
    pub metric: Option<String>,

    #[arg(long, env = "OUTFIT_SEED")]
    pub seed: Option<u64>,

    /// pr: complementary|triad; tar: uniform|peaked.
    #[arg(long)]
    pub mode: Option<String>,

    /// Train on a split: training-set size.
    #[arg(long)]
    pub n_train: Option<usize>,

    /// Train on a split: held-out size.
    #[arg(long)]
    pub n_test: Option<usize>,

    #[arg(long)]
    pub split_seed: Option<u64>,
}

/// Full-co-occurrence training examples assembled from the descriptor cache,
/// in deterministic order, plus the exclusion count.
fn assemble_examples(
    cfg: &PipelineConfig,
    args: &TrainArgs,
    schema: &PartSchema,
) -> CliResult<(Vec<TrainExample>, usize)> {
    let cache_path = resolve_path(
        args.descriptors.clone(),
        cfg.paths.descriptors.as_ref(),
        "descriptors",
        "descriptors",
    )?;
    require_exists(&cache_path)?;
    let map = descriptor_map(read_descriptor_cache(&cache_path)?);

    // Optional split: restrict to the seeded training subset, in split order.
    let id_order: Vec<String> = match (args.n_train, args.n_test) {
        (None, None) => map.keys().cloned().collect(),
        (Some(n_train), n_test) => {
            let records_path = resolve_path(
                args.records.clone(),
                cfg.paths.records.as_ref(),
                "records",
                "records",
            )?;
            require_exists(&records_path)?;
            let report = corpus::ingest(&records_path, schema)?;
            let spec = SplitSpec {
                n_train,
                n_test: n_test.unwrap_or(0),
                seed: args.split_seed.unwrap_or(resolve(
                    args.seed,
                    cfg.params.seed,
                    defaults::SEED,
                )),
            };
            let (train, _) = corpus::split(&report.records, &spec)?;
            train.into_iter().map(|r| r.id).collect()
        }
        (None, Some(_)) => {
            return Err(CliError::Usage(
                "--n-test requires --n-train".into(),
            ))
        }
    };

    let mut examples = Vec::new();
    let mut excluded = 0usize;
    let mut seen = HashSet::new();
    for id in id_order {
        if !seen.insert(id.clone()) {
            continue;
        }
        let Some(parts_map) = map.get(&id) else {
            excluded += 1;
            continue;
        };
        let parts: Option<Vec<_>> = schema
            .names()
            .iter()
            .map(|name| parts_map.get(name).cloned())
            .collect();
        match parts {
            Some(parts) => examples.push(TrainExample { id, parts }),
            None => {
                log::warn!("record {id} is missing a schema part; excluded from training");
                excluded += 1;
            }
        }
    }
    if examples.is_empty() {
        return Err(CliError::Data(
            "no training examples with full part co-occurrence".into(),
        ));
    }
    Ok((examples, excluded))
}

/// Quantize every example's parts against the codebook: one codeword row per
/// image.
fn codeword_matrix(examples: &[TrainExample], codebook: &Codebook) -> CliResult<Vec<Vec<usize>>> {
    examples
        .iter()
        .map(|ex| {
            ex.parts
                .iter()
                .map(|d| Ok(codebook.quantize(d.values())?))
                .collect()
        })
        .collect()
}

fn parse_metric(args: &TrainArgs, cfg: &PipelineConfig) -> CliResult<Metric> {
    let text = args
        .metric
        .clone()
        .or_else(|| cfg.params.metric.clone())
        .unwrap_or_else(|| "l1".to_string());
    Metric::from_str(&text).map_err(CliError::Usage)
}

pub fn run(cfg: &PipelineConfig, args: TrainArgs) -> CliResult<Value> {
    let kind = ModelKind::from_str(&args.model).map_err(CliError::Usage)?;
    let out = resolve_path(args.out.clone(), cfg.paths.model.as_ref(), "out", "model")?;
    let schema = cfg.part_schema(args.parts.as_ref())?;
    let seed = resolve(args.seed, cfg.params.seed, defaults::SEED);

    let mut summary = json!({
        "command": "train",
        "status": "ok",
        "model": kind.as_str(),
        "output": out,
    });
    let extras = summary.as_object_mut().unwrap();

    let load_codebook = |flag: &Option<PathBuf>| -> CliResult<(Codebook, PathBuf)> {
        let path = resolve_path(flag.clone(), cfg.paths.codebook.as_ref(), "codebook", "codebook")?;
        require_exists(&path)?;
        Ok((Codebook::load(&path)?, path))
    };

    let file = match kind {
        ModelKind::Pr => {
            let mode = match args.mode.as_deref().unwrap_or("complementary") {
                "complementary" => PrMode::Complementary,
                "triad" => PrMode::Triad,
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown pr mode {other:?} (expected complementary or triad)"
                    )))
                }
            };
            ModelFile::new(
                TrainedModel::Pr(PrConfig { mode, layout: HsvLayout::default() }),
                None,
            )
        }
        ModelKind::Tar => {
            let mode = parse_tar_mode(args.mode.as_deref())?;
            ModelFile::new(TrainedModel::Tar(TarConfig { mode, seed }), None)
        }
        ModelKind::Cnnc => {
            let (examples, excluded) = assemble_examples(cfg, &args, &schema)?;
            let metric = parse_metric(&args, cfg)?;
            let neighbors = resolve(args.neighbors, cfg.params.neighbors, defaults::NEIGHBORS);
            if neighbors == 0 || neighbors > examples.len() {
                return Err(CliError::Usage(format!(
                    "--neighbors must be in 1..={}, got {neighbors}",
                    examples.len()
                )));
            }
            extras.insert("examples".into(), examples.len().into());
            extras.insert("excluded".into(), excluded.into());
            ModelFile::new(
                TrainedModel::Cnnc(CnncModel { neighbors, metric, train: examples }),
                None,
            )
        }
        ModelKind::Gmm => {
            let (examples, excluded) = assemble_examples(cfg, &args, &schema)?;
            let (codebook, cb_path) = load_codebook(&args.codebook)?;
            let rows = codeword_matrix(&examples, &codebook)?;
            let data: Vec<Vec<f64>> = rows
                .iter()
                .map(|row| row.iter().map(|&w| w as f64).collect())
                .collect();
            let components = resolve(args.components, cfg.params.components, defaults::COMPONENTS);
            let training = gmm_train(&data, components, seed, &GmmOptions::default())?;
            for w in &training.warnings {
                log::warn!("{w}");
            }
            extras.insert("examples".into(), examples.len().into());
            extras.insert("excluded".into(), excluded.into());
            extras.insert("iterations".into(), training.log_likelihoods.len().into());
            extras.insert("converged".into(), training.converged.into());
            ModelFile::new(
                TrainedModel::Gmm(training.model),
                Some(cb_path.display().to_string()),
            )
        }
        ModelKind::Mcl => {
            let (examples, excluded) = assemble_examples(cfg, &args, &schema)?;
            let (codebook, cb_path) = load_codebook(&args.codebook)?;
            let rows = codeword_matrix(&examples, &codebook)?;
            let topics = resolve(args.topics, cfg.params.topics, defaults::TOPICS);
            let opts = MclOptions {
                alpha: resolve(args.alpha, cfg.params.alpha, defaults::ALPHA),
                eta: resolve(args.eta, cfg.params.eta, defaults::ETA),
                ..Default::default()
            };
            let training = mcl_train(&rows, topics, codebook.k(), seed, &opts)?;
            extras.insert("examples".into(), examples.len().into());
            extras.insert("excluded".into(), excluded.into());
            extras.insert("iterations".into(), training.log_likelihoods.len().into());
            extras.insert("converged".into(), training.converged.into());
            ModelFile::new(
                TrainedModel::Mcl(training.model),
                Some(cb_path.display().to_string()),
            )
        }
        ModelKind::Hybrid => {
            let (examples, excluded) = assemble_examples(cfg, &args, &schema)?;
            let metric = parse_metric(&args, cfg)?;
            let neighbors = resolve(args.neighbors, cfg.params.neighbors, defaults::NEIGHBORS)
                .min(examples.len());
            let tau = resolve(args.tau, cfg.params.tau, DEFAULT_SOLID_THRESHOLD);
            let mode = parse_tar_mode(args.mode.as_deref())?;
            extras.insert("examples".into(), examples.len().into());
            extras.insert("excluded".into(), excluded.into());
            ModelFile::new(
                TrainedModel::Hybrid(HybridModel {
                    tau,
                    layout: HsvLayout::default(),
                    cnnc: CnncModel { neighbors, metric, train: examples },
                    tar: TarConfig { mode, seed },
                }),
                None,
            )
        }
    };

    file.save(&out)?;
    Ok(summary)
}

fn parse_tar_mode(mode: Option<&str>) -> CliResult<TarMode> {
    match mode.unwrap_or("uniform") {
        "uniform" => Ok(TarMode::Uniform),
        "peaked" => Ok(TarMode::Peaked),
        other => Err(CliError::Usage(format!(
            "unknown tar mode {other:?} (expected uniform or peaked)"
        ))),
    }
}
