//! Texture-agnostic retrieval: seeded random query transformation.
//!
//! The default mode draws K i.i.d. uniform values and normalizes them to a
//! descriptor; the peaked mode produces a literal solid color, one-hot on a
//! random hue bin with saturation and value mass at their top bins.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{HsvLayout, PartDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TarMode {
    #[default]
    Uniform,
    Peaked,
}

/// Training-free model: only the sampling mode and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TarConfig {
    pub mode: TarMode,
    pub seed: u64,
}

/// K i.i.d. draws from U([0,1]) normalized to sum 1.
pub fn tar_uniform(dims: usize, seed: u64) -> Result<PartDescriptor> {
    if dims == 0 {
        return Err(Error::InvalidParameter("descriptor dimension must be positive".into()));
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut values: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        values[0] = 1.0;
    } else {
        values.iter_mut().for_each(|v| *v /= total);
    }
    PartDescriptor::new(values)
}

/// Solid-color literalization: one-hot at a uniformly random hue bin, with
/// the saturation and value channels concentrated in their top bins.
pub fn tar_peaked(layout: HsvLayout, seed: u64) -> Result<PartDescriptor> {
    let mut rng = StdRng::seed_from_u64(seed);
    let hue_bin = rng.random_range(0..layout.hue_bins);
    let mut values = vec![0.0; layout.dims()];
    let third = 1.0 / 3.0;
    values[hue_bin] = third;
    values[layout.hue_bins + layout.sat_bins - 1] = third;
    values[layout.dims() - 1] = third;
    PartDescriptor::new(values)
}

/// Dispatch on the configured mode. Peaked sampling requires the descriptor
/// space to be the HSV histogram layout.
pub fn tar_transform(config: &TarConfig, dims: usize, layout: HsvLayout) -> Result<PartDescriptor> {
    match config.mode {
        TarMode::Uniform => tar_uniform(dims, config.seed),
        TarMode::Peaked => {
            if dims != layout.dims() {
                return Err(Error::InvalidParameter(format!(
                    "peaked sampling needs the {}-dim HSV layout, got {dims} dims",
                    layout.dims()
                )));
            }
            tar_peaked(layout, config.seed)
        }
    }
}
