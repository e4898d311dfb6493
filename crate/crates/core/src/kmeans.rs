//! Lloyd's k-means with k-means++ seeding.
//!
//! Used for codebook training, the diversity operator, and mixture-model
//! initialization. Ties in nearest-centroid assignment break toward the
//! lowest index; runs are deterministic for a fixed seed.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::distance::squared_l2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop when the relative inertia decrease falls below this.
    pub rel_tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 300,
            rel_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Inertia after each assignment step. Nonincreasing.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Index and squared distance of the nearest centroid; ties go to the lowest
/// index.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_l2(point, c);
        if d < best_dist {
            best = i;
            best_dist = d;
        }
    }
    (best, best_dist)
}

/// k-means++ seeding: the first center is uniform, later ones are drawn with
/// probability proportional to the squared distance from the chosen set.
/// When every remaining point coincides with a chosen center (duplicate-heavy
/// data), the lowest unchosen index fills the slot.
pub fn plus_plus_seeds(data: &[Vec<f64>], k: usize, rng: &mut StdRng) -> Vec<usize> {
    debug_assert!(k >= 1 && k <= data.len());
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..data.len()));

    let mut min_dist: Vec<f64> = data
        .iter()
        .map(|p| squared_l2(p, &data[chosen[0]]))
        .collect();

    while chosen.len() < k {
        let total: f64 = min_dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = data.len() - 1;
            for (i, d) in min_dist.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            match (0..data.len()).find(|i| !chosen.contains(i)) {
                Some(i) => i,
                None => break,
            }
        };
        chosen.push(next);
        for (i, d) in min_dist.iter_mut().enumerate() {
            let nd = squared_l2(&data[i], &data[next]);
            if nd < *d {
                *d = nd;
            }
        }
    }
    chosen
}

/// Run k-means. Requires `1 <= k <= data.len()` and uniform dimensions;
/// duplicates are tolerated (clusters may stay empty on degenerate data).
pub fn fit(data: &[Vec<f64>], k: usize, seed: u64, opts: &KMeansOptions) -> Result<KMeansFit> {
    if data.is_empty() {
        return Err(Error::EmptyInput("k-means data"));
    }
    if k == 0 || k > data.len() {
        return Err(Error::InvalidParameter(format!(
            "k must be in 1..={}, got {k}",
            data.len()
        )));
    }
    let dim = data[0].len();
    for p in data {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }

    let mut rng = StdRng::seed_from_u64(seed);
    let mut centroids: Vec<Vec<f64>> = plus_plus_seeds(data, k, &mut rng)
        .into_iter()
        .map(|i| data[i].clone())
        .collect();
    // Degenerate seeding can return fewer than k distinct points; duplicate
    // the first seed so the shape stays k x dim.
    while centroids.len() < k {
        centroids.push(centroids[0].clone());
    }

    let mut assignments = vec![0usize; data.len()];
    let mut inertia_trace = Vec::new();
    let mut prev_inertia = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        iterations = iter + 1;

        let mut inertia = 0.0;
        for (i, p) in data.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            assignments[i] = c;
            inertia += d;
        }
        inertia_trace.push(inertia);

        if inertia == 0.0 {
            converged = true;
            break;
        }
        if prev_inertia.is_finite() {
            let rel = (prev_inertia - inertia) / prev_inertia;
            if rel < opts.rel_tol {
                converged = true;
                break;
            }
        }
        prev_inertia = inertia;

        // Update step.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in data.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = std::mem::take(&mut sums[c]);
            }
        }

        // Relocate empty clusters to the points currently worst served.
        let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
        if !empty.is_empty() {
            let mut by_dist: Vec<(usize, f64)> = data
                .iter()
                .enumerate()
                .map(|(i, p)| (i, nearest(p, &centroids).1))
                .collect();
            by_dist.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            for (slot, c) in empty.into_iter().enumerate() {
                let (idx, d) = by_dist[slot.min(by_dist.len() - 1)];
                if d > 0.0 {
                    centroids[c] = data[idx].clone();
                }
            }
        }
    }

    Ok(KMeansFit {
        centroids,
        assignments,
        inertia_trace,
        iterations,
        converged,
    })
}
