//! Query-transformation algorithms.
//!
//! Each recommender maps a holistic descriptor with one hidden part to one or
//! more predicted part descriptors:
//!
//! * [`pr`] — perceptual hue-wheel rotation (complementary / triad).
//! * [`cnnc`] — complementary nearest neighbor consensus plus the diversity
//!   operator.
//! * [`gmm`] — Gaussian mixture over part codewords with constrained
//!   conditional maximization.
//! * [`mcl`] — topic mixture of Markov chains over part codewords.
//! * [`tar`] — texture-agnostic random descriptor sampling.
//! * [`hybrid`] — solid/pattern classifier routing between CNNC and TAR.

pub mod cnnc;
pub mod gmm;
pub mod hybrid;
pub mod mcl;
pub mod pr;
pub mod tar;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::atomic_write;

pub use cnnc::{
    cnnc_consensus, cnnc_diverse, cnnc_neighbors, CnncModel, DiverseSelection, Neighbor,
    NeighborSet, TrainExample,
};
pub use gmm::{gmm_infer, gmm_train, GmmInference, GmmModel, GmmOptions, GmmTraining};
pub use hybrid::{
    hybrid_recommend, solid_pattern_classify, HybridModel, HybridOutcome, QueryClass,
    DEFAULT_SOLID_THRESHOLD,
};
pub use mcl::{mcl_infer, mcl_sample, mcl_train, McInference, MclModel, MclOptions, MclTraining};
pub use pr::{pr_transform, PrConfig, PrMode};
pub use tar::{tar_peaked, tar_transform, tar_uniform, TarConfig, TarMode};

pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Pr,
    Cnnc,
    Gmm,
    Mcl,
    Tar,
    Hybrid,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Pr,
        ModelKind::Cnnc,
        ModelKind::Gmm,
        ModelKind::Mcl,
        ModelKind::Tar,
        ModelKind::Hybrid,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Pr => "pr",
            ModelKind::Cnnc => "cnnc",
            ModelKind::Gmm => "gmm",
            ModelKind::Mcl => "mcl",
            ModelKind::Tar => "tar",
            ModelKind::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pr" => Ok(ModelKind::Pr),
            "cnnc" => Ok(ModelKind::Cnnc),
            "gmm" => Ok(ModelKind::Gmm),
            "mcl" => Ok(ModelKind::Mcl),
            "tar" => Ok(ModelKind::Tar),
            "hybrid" => Ok(ModelKind::Hybrid),
            other => Err(format!(
                "unknown model kind {other:?} (expected pr, cnnc, gmm, mcl, tar, or hybrid)"
            )),
        }
    }
}

/// A trained recommender with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "lowercase")]
pub enum TrainedModel {
    Pr(PrConfig),
    Cnnc(CnncModel),
    Gmm(GmmModel),
    Mcl(MclModel),
    Tar(TarConfig),
    Hybrid(HybridModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Pr(_) => ModelKind::Pr,
            TrainedModel::Cnnc(_) => ModelKind::Cnnc,
            TrainedModel::Gmm(_) => ModelKind::Gmm,
            TrainedModel::Mcl(_) => ModelKind::Mcl,
            TrainedModel::Tar(_) => ModelKind::Tar,
            TrainedModel::Hybrid(_) => ModelKind::Hybrid,
        }
    }
}

/// On-disk model format: `{version, kind, codebook_ref, parameters}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub codebook_ref: Option<String>,
    #[serde(flatten)]
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(model: TrainedModel, codebook_ref: Option<String>) -> Self {
        ModelFile {
            version: MODEL_FILE_VERSION,
            codebook_ref,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        atomic_write(path, &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Json { path: path.into(), source: e })?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::InvalidModel(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        Ok(file)
    }
}
