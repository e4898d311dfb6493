//! Tuned perceptual retrieval: hue-wheel rotation baselines.
//!
//! The complementary transform rotates the hue sub-histogram by 180 degrees;
//! the triad transform produces two outputs rotated by +120 and -120 degrees.
//! Both reverse the saturation and value sub-histograms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{HsvLayout, PartDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrMode {
    Complementary,
    Triad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrConfig {
    pub mode: PrMode,
    #[serde(default)]
    pub layout: HsvLayout,
}

/// Rotate hue bins by `shift` and reverse the S and V sub-histograms. A pure
/// bin permutation, so the result is bit-exact relative to the input.
fn transform_once(values: &[f64], layout: &HsvLayout, shift: usize) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    let hue = layout.hue_bins;
    for (i, &v) in values[layout.hue_range()].iter().enumerate() {
        out[(i + shift) % hue] = v;
    }
    let sat = &values[layout.sat_range()];
    for (i, &v) in sat.iter().rev().enumerate() {
        out[hue + i] = v;
    }
    let val = &values[layout.val_range()];
    for (i, &v) in val.iter().rev().enumerate() {
        out[hue + layout.sat_bins + i] = v;
    }
    out
}

/// Transform an HSV-histogram query into one (complementary) or two (triad)
/// predicted descriptors. Errors when the descriptor does not match the HSV
/// layout or the layout does not admit the requested rotation.
pub fn pr_transform(
    query: &PartDescriptor,
    mode: PrMode,
    layout: HsvLayout,
) -> Result<Vec<PartDescriptor>> {
    if query.len() != layout.dims() {
        return Err(Error::InvalidDescriptor(format!(
            "expected an HSV histogram of {} bins, got {} values",
            layout.dims(),
            query.len()
        )));
    }
    let shifts: Vec<usize> = match mode {
        PrMode::Complementary => {
            if layout.hue_bins % 2 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "complementary rotation needs an even hue bin count, got {}",
                    layout.hue_bins
                )));
            }
            vec![layout.hue_bins / 2]
        }
        PrMode::Triad => {
            if layout.hue_bins % 3 != 0 {
                return Err(Error::InvalidParameter(format!(
                    "triad rotation needs a hue bin count divisible by 3, got {}",
                    layout.hue_bins
                )));
            }
            let third = layout.hue_bins / 3;
            vec![third, layout.hue_bins - third]
        }
    };
    shifts
        .into_iter()
        .map(|s| PartDescriptor::new(transform_once(query.values(), &layout, s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_hot_hue(bin: usize) -> PartDescriptor {
        let layout = HsvLayout::default();
        let mut v = vec![0.0; layout.dims()];
        v[bin] = 1.0 / 3.0;
        v[24 + 7] = 1.0 / 3.0;
        v[32 + 7] = 1.0 / 3.0;
        PartDescriptor::new(v).unwrap()
    }

    #[test]
    fn complementary_shifts_red_to_cyan() {
        let out = pr_transform(&one_hot_hue(0), PrMode::Complementary, HsvLayout::default())
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].values()[12], 1.0 / 3.0);
        assert_eq!(out[0].values()[0], 0.0);
    }

    #[test]
    fn triad_shifts_to_plus_minus_120_degrees() {
        let out = pr_transform(&one_hot_hue(0), PrMode::Triad, HsvLayout::default()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].values()[8], 1.0 / 3.0);
        assert_eq!(out[1].values()[16], 1.0 / 3.0);
    }

    #[test]
    fn complementary_is_an_involution() {
        // Bin permutations compose exactly, so double application returns the
        // original bits.
        let layout = HsvLayout::default();
        let mut v = vec![0.0; 40];
        v[3] = 0.2 / 3.0;
        v[17] = 0.8 / 3.0;
        for (i, x) in (24..32).zip([0.1, 0.0, 0.3, 0.05, 0.15, 0.2, 0.1, 0.1]) {
            v[i] = x / 3.0;
        }
        for (i, x) in (32..40).zip([0.4, 0.1, 0.1, 0.1, 0.1, 0.1, 0.05, 0.05]) {
            v[i] = x / 3.0;
        }
        let d = PartDescriptor::new(v).unwrap();
        let once = pr_transform(&d, PrMode::Complementary, layout).unwrap();
        let twice = pr_transform(&once[0], PrMode::Complementary, layout).unwrap();
        assert_eq!(twice[0], d);
    }

    #[test]
    fn saturation_and_value_are_reflected() {
        let layout = HsvLayout::default();
        let mut v = vec![0.0; 40];
        v[0] = 1.0 / 3.0;
        v[24] = 1.0 / 3.0; // lowest saturation bin
        v[32] = 1.0 / 3.0; // lowest value bin
        let d = PartDescriptor::new(v).unwrap();
        let out = pr_transform(&d, PrMode::Complementary, layout).unwrap();
        assert_eq!(out[0].values()[24 + 7], 1.0 / 3.0);
        assert_eq!(out[0].values()[32 + 7], 1.0 / 3.0);
    }

    #[test]
    fn rejects_non_hsv_layout() {
        let d = PartDescriptor::new(vec![0.5, 0.5]).unwrap();
        assert!(pr_transform(&d, PrMode::Complementary, HsvLayout::default()).is_err());
    }
}
