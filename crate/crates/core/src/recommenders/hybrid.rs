//! Solid/pattern classification and the hybrid recommender that routes solid
//! queries to CNNC and patterned queries to TAR.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{HolisticDescriptor, HsvLayout, PartDescriptor};
use crate::recommenders::cnnc::{cnnc_consensus, cnnc_neighbors, CnncModel};
use crate::recommenders::tar::{tar_transform, TarConfig};
use crate::recommenders::ModelKind;

pub const DEFAULT_SOLID_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryClass {
    Solid,
    Patterned,
}

/// A query is solid when its largest hue bin holds at least `tau` of the hue
/// sub-histogram's mass.
pub fn solid_pattern_classify(
    descriptor: &PartDescriptor,
    layout: HsvLayout,
    tau: f64,
) -> Result<QueryClass> {
    if descriptor.len() != layout.dims() {
        return Err(Error::InvalidDescriptor(format!(
            "expected an HSV histogram of {} bins, got {} values",
            layout.dims(),
            descriptor.len()
        )));
    }
    let hue = &descriptor.values()[layout.hue_range()];
    let max = hue.iter().copied().fold(0.0, f64::max);
    let total: f64 = hue.iter().sum();
    // `max >= tau * total` avoids dividing by a zero hue channel.
    if max >= tau * total {
        Ok(QueryClass::Solid)
    } else {
        Ok(QueryClass::Patterned)
    }
}

/// Both sub-models embedded, so a saved hybrid file is self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub tau: f64,
    #[serde(default)]
    pub layout: HsvLayout,
    pub cnnc: CnncModel,
    pub tar: TarConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridOutcome {
    pub class: QueryClass,
    pub routed: ModelKind,
    pub descriptor: PartDescriptor,
}

/// Classify the query's first visible part, then return the routed
/// algorithm's output verbatim.
pub fn hybrid_recommend(model: &HybridModel, query: &HolisticDescriptor) -> Result<HybridOutcome> {
    if model.cnnc.train.is_empty() {
        return Err(Error::InvalidModel(
            "hybrid model has no CNNC training data".into(),
        ));
    }
    query.single_hidden()?;
    let visible = query
        .visible_indices()
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidQuery("no visible part".into()))?;
    let probe = query.part(visible).unwrap();
    let class = solid_pattern_classify(probe, model.layout, model.tau)?;
    match class {
        QueryClass::Solid => {
            let neighbors =
                cnnc_neighbors(query, &model.cnnc.train, model.cnnc.neighbors, model.cnnc.metric)?;
            let descriptor = cnnc_consensus(&neighbors)?;
            Ok(HybridOutcome { class, routed: ModelKind::Cnnc, descriptor })
        }
        QueryClass::Patterned => {
            let descriptor = tar_transform(&model.tar, probe.len(), model.layout)?;
            Ok(HybridOutcome { class, routed: ModelKind::Tar, descriptor })
        }
    }
}
