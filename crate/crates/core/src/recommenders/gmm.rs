//! Gaussian mixture over part codewords.
//!
//! Each dimension of the mixture space is one part; training points are rows
//! of codeword indices treated as real coordinates. Inference fixes the
//! observed parts and maximizes the joint density over the single missing
//! one by enumerating all candidate codewords.

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans;

/// Lower bound kept on every variance entry.
pub const VARIANCE_FLOOR: f64 = 1e-4;

const LN_2PI: f64 = 1.8378770664093453;

/// Diagonal-covariance Gaussian mixture: `M` components over `P` part
/// dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmModel {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

impl GmmModel {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> usize {
        self.means.first().map(Vec::len).unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.weights.len();
        if m == 0 || self.means.len() != m || self.variances.len() != m {
            return Err(Error::InvalidModel(
                "gmm weights, means, and variances must share a component count".into(),
            ));
        }
        let weight_sum: f64 = self.weights.iter().sum();
        if (weight_sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!(
                "gmm weights sum to {weight_sum}, expected 1"
            )));
        }
        let p = self.dims();
        for (mean, var) in self.means.iter().zip(&self.variances) {
            if mean.len() != p || var.len() != p {
                return Err(Error::InvalidModel("ragged gmm parameters".into()));
            }
            if var.iter().any(|&v| v < VARIANCE_FLOOR) {
                return Err(Error::InvalidModel(format!(
                    "gmm variance below the {VARIANCE_FLOOR} floor"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GmmOptions {
    pub max_iter: usize,
    /// Stop when the relative log-likelihood change falls below this.
    pub rel_tol: f64,
    pub variance_floor: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        GmmOptions {
            max_iter: 500,
            rel_tol: 1e-6,
            variance_floor: VARIANCE_FLOOR,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmmTraining {
    pub model: GmmModel,
    /// Total log-likelihood at the start of each EM iteration. Nondecreasing.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Result of the constrained conditional maximization: the winning codeword
/// for the missing part and the joint log-density of every candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmInference {
    pub codeword: usize,
    pub log_scores: Vec<f64>,
}

fn log_normal(x: f64, mean: f64, variance: f64) -> f64 {
    let diff = x - mean;
    -0.5 * (LN_2PI + variance.ln() + diff * diff / variance)
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Joint log-density `ln p(point | model)`.
pub fn log_density(model: &GmmModel, point: &[f64]) -> f64 {
    let per_component: Vec<f64> = model
        .weights
        .iter()
        .zip(model.means.iter().zip(&model.variances))
        .map(|(&w, (mean, var))| {
            if w <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let mut s = w.ln();
            for ((&x, &m), &v) in point.iter().zip(mean).zip(var) {
                s += log_normal(x, m, v);
            }
            s
        })
        .collect();
    log_sum_exp(&per_component)
}

/// Fit by EM with diagonal covariances: k-means++ initialization of the
/// means, uniform initial weights, global per-dimension variance as the
/// starting spread, and a variance floor applied after every M-step.
pub fn gmm_train(
    data: &[Vec<f64>],
    components: usize,
    seed: u64,
    opts: &GmmOptions,
) -> Result<GmmTraining> {
    if data.is_empty() {
        return Err(Error::EmptyInput("gmm training data"));
    }
    if components == 0 || components > data.len() {
        return Err(Error::InvalidParameter(format!(
            "component count must be in 1..={}, got {components}",
            data.len()
        )));
    }
    let p = data[0].len();
    if p == 0 {
        return Err(Error::InvalidParameter("zero-dimensional training data".into()));
    }
    for row in data {
        if row.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: row.len() });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite training value".into()));
        }
    }

    let n = data.len();
    let mut warnings = Vec::new();
    let all_identical = data.iter().all(|row| row == &data[0]);
    if all_identical && components > 1 {
        warnings.push(format!(
            "all {n} training points are identical; components collapse onto floored variances"
        ));
    }

    // Initialization.
    let mut rng = StdRng::seed_from_u64(seed);
    let seeds = kmeans::plus_plus_seeds(data, components, &mut rng);
    let mut means: Vec<Vec<f64>> = seeds.iter().map(|&i| data[i].clone()).collect();
    while means.len() < components {
        means.push(means[0].clone());
    }
    let mut global_var = vec![0.0; p];
    let mut global_mean = vec![0.0; p];
    for row in data {
        for (m, &x) in global_mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in global_mean.iter_mut() {
        *m /= n as f64;
    }
    for row in data {
        for ((v, &x), &m) in global_var.iter_mut().zip(row).zip(&global_mean) {
            *v += (x - m) * (x - m);
        }
    }
    for v in global_var.iter_mut() {
        *v = (*v / n as f64).max(opts.variance_floor);
    }
    let mut variances = vec![global_var; components];
    let mut weights = vec![1.0 / components as f64; components];

    let mut log_likelihoods: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut resp = vec![vec![0.0; components]; n];

    for _ in 0..opts.max_iter {
        // E-step.
        let mut total_ll = 0.0;
        for (i, row) in data.iter().enumerate() {
            let scores: Vec<f64> = (0..components)
                .map(|c| {
                    if weights[c] <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    let mut s = weights[c].ln();
                    for ((&x, &m), &v) in row.iter().zip(&means[c]).zip(&variances[c]) {
                        s += log_normal(x, m, v);
                    }
                    s
                })
                .collect();
            let ll = log_sum_exp(&scores);
            total_ll += ll;
            for c in 0..components {
                resp[i][c] = if scores[c] == f64::NEG_INFINITY {
                    0.0
                } else {
                    (scores[c] - ll).exp()
                };
            }
        }
        if let Some(&prev) = log_likelihoods.last() {
            if (total_ll - prev).abs() / prev.abs().max(1e-12) < opts.rel_tol {
                log_likelihoods.push(total_ll);
                converged = true;
                break;
            }
        }
        log_likelihoods.push(total_ll);

        // M-step.
        for c in 0..components {
            let nk: f64 = resp.iter().map(|r| r[c]).sum();
            weights[c] = nk / n as f64;
            if nk < 1e-300 {
                // Dead component: keep its parameters, weight stays ~0.
                continue;
            }
            let mut mean = vec![0.0; p];
            for (row, r) in data.iter().zip(&resp) {
                for (m, &x) in mean.iter_mut().zip(row) {
                    *m += r[c] * x;
                }
            }
            for m in mean.iter_mut() {
                *m /= nk;
            }
            let mut var = vec![0.0; p];
            for (row, r) in data.iter().zip(&resp) {
                for ((v, &x), &m) in var.iter_mut().zip(row).zip(&mean) {
                    *v += r[c] * (x - m) * (x - m);
                }
            }
            for v in var.iter_mut() {
                *v = (*v / nk).max(opts.variance_floor);
            }
            means[c] = mean;
            variances[c] = var;
        }
    }

    let model = GmmModel { weights, means, variances };
    model.validate()?;
    Ok(GmmTraining { model, log_likelihoods, converged, warnings })
}

/// Enumerate all `candidates` codewords for the single missing dimension and
/// return the joint-density argmax (ties to the lowest index).
pub fn gmm_infer(
    model: &GmmModel,
    query: &[Option<f64>],
    candidates: usize,
) -> Result<GmmInference> {
    if query.len() != model.dims() {
        return Err(Error::DimensionMismatch {
            expected: model.dims(),
            got: query.len(),
        });
    }
    if candidates == 0 {
        return Err(Error::InvalidParameter("candidate count must be positive".into()));
    }
    let missing: Vec<usize> = (0..query.len()).filter(|&j| query[j].is_none()).collect();
    let m = match missing.as_slice() {
        [m] => *m,
        [] => return Err(Error::InvalidQuery("query has no missing part".into())),
        _ => {
            return Err(Error::InvalidQuery(format!(
                "query has {} missing parts, expected exactly one",
                missing.len()
            )))
        }
    };

    let mut point: Vec<f64> = query.iter().map(|v| v.unwrap_or(0.0)).collect();
    let mut log_scores = Vec::with_capacity(candidates);
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for c in 0..candidates {
        point[m] = c as f64;
        let s = log_density(model, &point);
        if s > best_score {
            best = c;
            best_score = s;
        }
        log_scores.push(s);
    }
    Ok(GmmInference { codeword: best, log_scores })
}
