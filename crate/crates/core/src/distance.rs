//! Distance functions over part descriptors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Smoothing constant applied to both arguments of the KL distance so that
/// zero bins stay finite.
pub const KL_EPSILON: f64 = 1e-8;

/// Distance metric over descriptor vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    L1,
    L2,
    Kl,
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::L1 => l1(a, b),
            Metric::L2 => l2(a, b),
            Metric::Kl => symmetric_kl(a, b, KL_EPSILON),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Kl => "kl",
        };
        f.write_str(name)
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Metric::L1),
            "l2" => Ok(Metric::L2),
            "kl" => Ok(Metric::Kl),
            other => Err(format!("unknown metric {other:?} (expected l1, l2, or kl)")),
        }
    }
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn l2(a: &[f64], b: &[f64]) -> f64 {
    squared_l2(a, b).sqrt()
}

pub fn squared_l2(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Symmetric KL divergence `0.5 * (KL(p||q) + KL(q||p))` after both arguments
/// are smoothed with `eps` and renormalized.
pub fn symmetric_kl(a: &[f64], b: &[f64], eps: f64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let p = smooth(a, eps);
    let q = smooth(b, eps);
    let forward: f64 = p
        .iter()
        .zip(&q)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum();
    let backward: f64 = q
        .iter()
        .zip(&p)
        .map(|(qi, pi)| qi * (qi / pi).ln())
        .sum();
    0.5 * (forward + backward)
}

fn smooth(v: &[f64], eps: f64) -> Vec<f64> {
    let total: f64 = v.iter().sum::<f64>() + eps * v.len() as f64;
    v.iter().map(|x| (x + eps) / total).collect()
}
