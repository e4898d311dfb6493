//! `recommend`: transform a query image with one hidden part into predicted
//! descriptors using a trained model.

use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::{json, Value};

use outfit_core::features::{Codebook, HolisticDescriptor, HsvLayout, PartDescriptor};
use outfit_core::io::read_descriptor_cache;
use outfit_core::recommenders::{
    cnnc_diverse, cnnc_neighbors, gmm_infer, hybrid_recommend, mcl_infer, mcl_sample,
    pr_transform, tar_transform, ModelFile, TrainedModel,
};

use crate::artifacts::{descriptor_map, QueryFile, QUERY_FILE_VERSION};
use crate::config::{defaults, resolve, resolve_path, PipelineConfig};
use crate::error::{require_exists, CliError, CliResult};

#[derive(Debug, Args)]
pub struct RecommendArgs {
    /// Trained model file.
    #[arg(long, env = "OUTFIT_MODEL")]
    pub model: Option<PathBuf>,

    /// Descriptor cache holding the query image's visible parts.
    #[arg(long, env = "OUTFIT_DESCRIPTORS")]
    pub descriptors: Option<PathBuf>,

    /// Query image id.
    #[arg(long)]
    pub image: String,

    /// Name of the hidden part to predict.
    #[arg(long)]
    pub hidden: String,

    /// Transformed-query file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Shared codebook; overrides the model's codebook_ref.
    #[arg(long, env = "OUTFIT_CODEBOOK")]
    pub codebook: Option<PathBuf>,

    /// Return this many diverse outputs instead of the consensus (cnnc).
    #[arg(long)]
    pub diverse: Option<usize>,

    /// Sample the MCL completion instead of taking the mode.
    #[arg(long)]
    pub sample: bool,

    #[arg(long, env = "OUTFIT_SEED")]
    pub seed: Option<u64>,

    #[arg(long, value_delimiter = ',')]
    pub parts: Option<Vec<String>>,
}

fn resolve_codebook(
    flag: Option<PathBuf>,
    model_ref: Option<&String>,
    model_path: &Path,
) -> CliResult<Codebook> {
    if let Some(path) = flag {
        require_exists(&path)?;
        return Ok(Codebook::load(&path)?);
    }
    let reference = model_ref.ok_or_else(|| {
        CliError::Usage("this model needs a codebook: pass --codebook".into())
    })?;
    let as_given = PathBuf::from(reference);
    let resolved = if as_given.exists() {
        as_given
    } else {
        // Fall back to a path relative to the model file.
        model_path
            .parent()
            .map(|dir| dir.join(reference))
            .unwrap_or(as_given)
    };
    require_exists(&resolved)?;
    Ok(Codebook::load(&resolved)?)
}

pub fn run(cfg: &PipelineConfig, args: RecommendArgs) -> CliResult<Value> {
    let model_path = resolve_path(args.model.clone(), cfg.paths.model.as_ref(), "model", "model")?;
    let cache_path = resolve_path(
        args.descriptors.clone(),
        cfg.paths.descriptors.as_ref(),
        "descriptors",
        "descriptors",
    )?;
    let out = resolve_path(args.out.clone(), cfg.paths.output.as_ref(), "out", "output")?;
    require_exists(&model_path)?;
    require_exists(&cache_path)?;

    let schema = cfg.part_schema(args.parts.as_ref())?;
    let hidden_idx = schema.position(&args.hidden).ok_or_else(|| {
        CliError::Usage(format!(
            "part {:?} is not in the schema {:?}",
            args.hidden,
            schema.names()
        ))
    })?;
    let seed = resolve(args.seed, cfg.params.seed, defaults::SEED);

    let model_file = ModelFile::load(&model_path)?;
    let map = descriptor_map(read_descriptor_cache(&cache_path)?);
    let image_parts = map.get(&args.image).ok_or_else(|| {
        CliError::Data(format!("image {:?} not found in the descriptor cache", args.image))
    })?;

    let parts: Vec<Option<PartDescriptor>> = schema
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            if j == hidden_idx {
                Ok(None)
            } else {
                image_parts.get(name).cloned().map(Some).ok_or_else(|| {
                    CliError::Data(format!(
                        "descriptor for ({}, {name}) not found in the cache",
                        args.image
                    ))
                })
            }
        })
        .collect::<CliResult<_>>()?;
    let query = HolisticDescriptor::new(parts).map_err(outfit_core::Error::from)?;
    let first_visible = query
        .visible_indices()
        .first()
        .copied()
        .ok_or_else(|| CliError::Data("query has no visible part".into()))?;

    let mut codewords = None;
    let mut class = None;
    let descriptors: Vec<PartDescriptor> = match &model_file.model {
        TrainedModel::Pr(pr) => {
            pr_transform(query.part(first_visible).unwrap(), pr.mode, pr.layout)?
        }
        TrainedModel::Cnnc(m) => {
            let neighbors = cnnc_neighbors(&query, &m.train, m.neighbors, m.metric)?;
            match args.diverse {
                Some(d) => {
                    let selection = cnnc_diverse(&neighbors, d, seed)?;
                    selection.entries.into_iter().map(|e| e.hidden).collect()
                }
                None => vec![outfit_core::recommenders::cnnc_consensus(&neighbors)?],
            }
        }
        TrainedModel::Gmm(g) => {
            let codebook =
                resolve_codebook(args.codebook.clone(), model_file.codebook_ref.as_ref(), &model_path)?;
            let cw_query: Vec<Option<f64>> = query
                .parts()
                .iter()
                .map(|p| match p {
                    Some(d) => Ok(Some(codebook.quantize(d.values())? as f64)),
                    None => Ok(None),
                })
                .collect::<CliResult<_>>()?;
            let inference = gmm_infer(g, &cw_query, codebook.k())?;
            codewords = Some(vec![inference.codeword]);
            vec![codebook.centroid_descriptor(inference.codeword)?]
        }
        TrainedModel::Mcl(m) => {
            let codebook =
                resolve_codebook(args.codebook.clone(), model_file.codebook_ref.as_ref(), &model_path)?;
            let cw_query: Vec<Option<usize>> = query
                .parts()
                .iter()
                .map(|p| match p {
                    Some(d) => Ok(Some(codebook.quantize(d.values())?)),
                    None => Ok(None),
                })
                .collect::<CliResult<_>>()?;
            let codeword = if args.sample {
                mcl_sample(m, &cw_query, seed)?
            } else {
                mcl_infer(m, &cw_query)?.codeword
            };
            codewords = Some(vec![codeword]);
            vec![codebook.centroid_descriptor(codeword)?]
        }
        TrainedModel::Tar(t) => {
            let dims = query.part(first_visible).unwrap().len();
            vec![tar_transform(t, dims, HsvLayout::default())?]
        }
        TrainedModel::Hybrid(h) => {
            let outcome = hybrid_recommend(h, &query)?;
            class = Some(outcome.class);
            vec![outcome.descriptor]
        }
    };

    let query_file = QueryFile {
        version: QUERY_FILE_VERSION,
        query_id: args.image.clone(),
        hidden_part: args.hidden.clone(),
        model_kind: model_file.model.kind().as_str().to_string(),
        descriptors,
        codewords,
        class,
    };
    query_file.save(&out)?;

    Ok(json!({
        "command": "recommend",
        "status": "ok",
        "model": query_file.model_kind,
        "image": args.image,
        "hidden": args.hidden,
        "descriptors": query_file.descriptors.len(),
        "output": out,
    }))
}
