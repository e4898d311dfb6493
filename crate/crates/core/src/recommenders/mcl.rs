//! Topic mixture of Markov chains over part codewords.
//!
//! Each image contributes one structured word: the chain of its part
//! codewords `w_1 .. w_P`. The initial distribution `p(w_1)` is shared across
//! topics; every adjacent part pair carries a per-topic K x K transition
//! matrix. Training is EM with Dirichlet pseudo-count smoothing (`eta` on
//! rows and the initial distribution, `alpha` on topic weights). Inference
//! picks the most likely topic for the visible parts, then the modal
//! completion of the chain; a seeded sampling mode draws from the same
//! conditional instead.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MclModel {
    /// Topic count T.
    pub topics: usize,
    /// Codebook size K.
    pub codewords: usize,
    /// Topic mixture weights, length T.
    pub weights: Vec<f64>,
    /// Shared initial distribution over codewords, length K.
    pub initial: Vec<f64>,
    /// `transitions[z][j][a][b]` = p(part j+1 takes b | part j took a, topic z).
    pub transitions: Vec<Vec<Vec<Vec<f64>>>>,
}

impl MclModel {
    pub fn parts(&self) -> usize {
        self.transitions
            .first()
            .map(|per_pair| per_pair.len() + 1)
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics == 0 || self.weights.len() != self.topics {
            return Err(Error::InvalidModel("topic count mismatch".into()));
        }
        if self.initial.len() != self.codewords {
            return Err(Error::InvalidModel("initial distribution length mismatch".into()));
        }
        let sum: f64 = self.initial.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!(
                "initial distribution sums to {sum}, expected 1"
            )));
        }
        let wsum: f64 = self.weights.iter().sum();
        if (wsum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidModel(format!(
                "topic weights sum to {wsum}, expected 1"
            )));
        }
        if self.transitions.len() != self.topics {
            return Err(Error::InvalidModel("transition tensor topic count mismatch".into()));
        }
        let pairs = self.transitions[0].len();
        for per_topic in &self.transitions {
            if per_topic.len() != pairs {
                return Err(Error::InvalidModel("ragged transition tensor".into()));
            }
            for matrix in per_topic {
                if matrix.len() != self.codewords {
                    return Err(Error::InvalidModel("transition row count mismatch".into()));
                }
                for row in matrix {
                    if row.len() != self.codewords {
                        return Err(Error::InvalidModel("transition column count mismatch".into()));
                    }
                    let rsum: f64 = row.iter().sum();
                    if (rsum - 1.0).abs() > 1e-9 {
                        return Err(Error::InvalidModel(format!(
                            "transition row sums to {rsum}, expected 1"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Log-probability of a full chain under topic `z`, including the shared
    /// initial factor.
    pub fn chain_log_prob(&self, words: &[usize], z: usize) -> f64 {
        let mut s = self.initial[words[0]].ln();
        for (j, pair) in words.windows(2).enumerate() {
            s += self.transitions[z][j][pair[0]][pair[1]].ln();
        }
        s
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MclOptions {
    /// Pseudo-count on topic weights.
    pub alpha: f64,
    /// Pseudo-count on transition rows and the initial distribution.
    pub eta: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for MclOptions {
    fn default() -> Self {
        MclOptions {
            alpha: 1.0,
            eta: 0.1,
            max_iter: 200,
            rel_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MclTraining {
    pub model: MclModel,
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McInference {
    /// Modal completion for the missing part.
    pub codeword: usize,
    /// The winning topic.
    pub topic: usize,
    /// `p(z | visible words)`, sums to 1.
    pub topic_posterior: Vec<f64>,
    /// Chain log-probability of each candidate completion under the winning
    /// topic.
    pub completion_log_probs: Vec<f64>,
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn validate_data(data: &[Vec<usize>], codewords: usize) -> Result<usize> {
    if data.is_empty() {
        return Err(Error::EmptyInput("mcl training data"));
    }
    let p = data[0].len();
    if p < 2 {
        return Err(Error::InvalidParameter(format!(
            "chains need at least 2 parts, got {p}"
        )));
    }
    for row in data {
        if row.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: row.len() });
        }
        if let Some(&w) = row.iter().find(|&&w| w >= codewords) {
            return Err(Error::InvalidParameter(format!(
                "codeword {w} out of range 0..{codewords}"
            )));
        }
    }
    Ok(p)
}

/// EM over the chain mixture. Deterministic per seed; `topics == 1` needs no
/// randomness and converges to smoothed empirical bigram statistics.
pub fn mcl_train(
    data: &[Vec<usize>],
    topics: usize,
    codewords: usize,
    seed: u64,
    opts: &MclOptions,
) -> Result<MclTraining> {
    if topics == 0 {
        return Err(Error::InvalidParameter("topic count must be at least 1".into()));
    }
    if codewords == 0 {
        return Err(Error::InvalidParameter("codeword count must be at least 1".into()));
    }
    if opts.eta < 0.0 || opts.alpha < 0.0 {
        return Err(Error::InvalidParameter("priors must be nonnegative".into()));
    }
    let p = validate_data(data, codewords)?;
    let n = data.len();
    let pairs = p - 1;

    // Shared initial distribution: smoothed first-word frequencies, fixed
    // across EM because it carries no topic dependence.
    let mut initial = vec![opts.eta; codewords];
    for row in data {
        initial[row[0]] += 1.0;
    }
    let initial_total = n as f64 + opts.eta * codewords as f64;
    for v in initial.iter_mut() {
        *v /= initial_total;
    }

    // Responsibility init: uniform for a single topic, seeded noise otherwise.
    let mut resp: Vec<Vec<f64>> = if topics == 1 {
        vec![vec![1.0]; n]
    } else {
        let mut rng = StdRng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..topics).map(|_| 0.1 + rng.random::<f64>()).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / total).collect()
            })
            .collect()
    };

    let mut weights = vec![1.0 / topics as f64; topics];
    let mut transitions = vec![vec![vec![vec![0.0; codewords]; codewords]; pairs]; topics];
    let mut log_likelihoods: Vec<f64> = Vec::new();
    let mut converged = false;

    for _ in 0..opts.max_iter {
        // M-step from the current responsibilities.
        let alpha_total = n as f64 + opts.alpha * topics as f64;
        for z in 0..topics {
            let nz: f64 = resp.iter().map(|r| r[z]).sum();
            weights[z] = (nz + opts.alpha) / alpha_total;
            for j in 0..pairs {
                let matrix = &mut transitions[z][j];
                let mut row_totals = vec![opts.eta * codewords as f64; codewords];
                for row in matrix.iter_mut() {
                    row.iter_mut().for_each(|v| *v = opts.eta);
                }
                for (chain, r) in data.iter().zip(&resp) {
                    matrix[chain[j]][chain[j + 1]] += r[z];
                    row_totals[chain[j]] += r[z];
                }
                for (row, &total) in matrix.iter_mut().zip(&row_totals) {
                    if total > 0.0 {
                        row.iter_mut().for_each(|v| *v /= total);
                    } else {
                        // eta == 0 and no mass: leave the row uniform.
                        row.iter_mut()
                            .for_each(|v| *v = 1.0 / codewords as f64);
                    }
                }
            }
        }

        // E-step.
        let mut total_ll = 0.0;
        for (i, chain) in data.iter().enumerate() {
            let scores: Vec<f64> = (0..topics)
                .map(|z| {
                    let w = weights[z];
                    if w <= 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        w.ln() + chain_log_prob_with(&initial, &transitions[z], chain)
                    }
                })
                .collect();
            let ll = log_sum_exp(&scores);
            total_ll += ll;
            for z in 0..topics {
                resp[i][z] = if scores[z] == f64::NEG_INFINITY {
                    0.0
                } else {
                    (scores[z] - ll).exp()
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
    }

    let model = MclModel {
        topics,
        codewords,
        weights,
        initial,
        transitions,
    };
    model.validate()?;
    Ok(MclTraining { model, log_likelihoods, converged })
}

fn chain_log_prob_with(
    initial: &[f64],
    per_pair: &[Vec<Vec<f64>>],
    chain: &[usize],
) -> f64 {
    let mut s = initial[chain[0]].ln();
    for (j, pair) in chain.windows(2).enumerate() {
        s += per_pair[j][pair[0]][pair[1]].ln();
    }
    s
}

fn completion_setup(model: &MclModel, query: &[Option<usize>]) -> Result<usize> {
    let p = model.parts();
    if query.len() != p {
        return Err(Error::DimensionMismatch { expected: p, got: query.len() });
    }
    let missing: Vec<usize> = (0..p).filter(|&j| query[j].is_none()).collect();
    if missing.len() == p {
        return Err(Error::InvalidQuery("all parts hidden".into()));
    }
    let m = match missing.as_slice() {
        [m] => *m,
        _ => {
            return Err(Error::InvalidQuery(format!(
                "query has {} missing parts, expected exactly one",
                missing.len()
            )))
        }
    };
    for w in query.iter().flatten() {
        if *w >= model.codewords {
            return Err(Error::InvalidQuery(format!(
                "codeword {w} out of range 0..{}",
                model.codewords
            )));
        }
    }
    Ok(m)
}

/// Score every candidate completion under every topic:
/// `joint[z][c] = ln w_z + ln p(chain with missing part = c | z)`.
fn joint_scores(model: &MclModel, query: &[Option<usize>], m: usize) -> Vec<Vec<f64>> {
    let mut chain: Vec<usize> = query.iter().map(|w| w.unwrap_or(0)).collect();
    (0..model.topics)
        .map(|z| {
            (0..model.codewords)
                .map(|c| {
                    chain[m] = c;
                    let w = model.weights[z];
                    if w <= 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        w.ln() + model.chain_log_prob(&chain, z)
                    }
                })
                .collect()
        })
        .collect()
}

/// Pick the topic most likely given the visible words, then return the modal
/// chain completion under that topic. Ties break to the lowest index.
pub fn mcl_infer(model: &MclModel, query: &[Option<usize>]) -> Result<McInference> {
    model.validate()?;
    let m = completion_setup(model, query)?;
    let joint = joint_scores(model, query, m);

    // p(z | visible) marginalizes the missing word out of the joint.
    let marginals: Vec<f64> = joint.iter().map(|row| log_sum_exp(row)).collect();
    let evidence = log_sum_exp(&marginals);
    let topic_posterior: Vec<f64> = marginals
        .iter()
        .map(|&s| {
            if s == f64::NEG_INFINITY {
                0.0
            } else {
                (s - evidence).exp()
            }
        })
        .collect();
    let topic = argmax(&topic_posterior);

    let completion_log_probs: Vec<f64> = (0..model.codewords)
        .map(|c| joint[topic][c] - model.weights[topic].ln())
        .collect();
    let codeword = argmax(&completion_log_probs);
    Ok(McInference {
        codeword,
        topic,
        topic_posterior,
        completion_log_probs,
    })
}

/// Sampling variant: draw the completion from the chain conditional under
/// the winning topic instead of taking the mode.
pub fn mcl_sample(model: &MclModel, query: &[Option<usize>], seed: u64) -> Result<usize> {
    let inference = mcl_infer(model, query)?;
    let weights: Vec<f64> = inference
        .completion_log_probs
        .iter()
        .map(|&s| if s == f64::NEG_INFINITY { 0.0 } else { s.exp() })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Ok(inference.codeword);
    }
    let mut rng = StdRng::seed_from_u64(seed);
    let mut target = rng.random::<f64>() * total;
    for (c, w) in weights.iter().enumerate() {
        target -= w;
        if target <= 0.0 {
            return Ok(c);
        }
    }
    Ok(weights.len() - 1)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}
