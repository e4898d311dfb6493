//! Complementary nearest neighbor consensus.
//!
//! Picks the training images closest to the query on its visible parts,
//! averages their hidden-part descriptors, and optionally diversifies the
//! neighbor set by clustering.

use serde::{Deserialize, Serialize};

use crate::distance::{squared_l2, Metric};
use crate::error::{Error, Result};
use crate::features::{HolisticDescriptor, PartDescriptor};
use crate::kmeans::{self, KMeansOptions};

/// One fully annotated training image: every part descriptor present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExample {
    pub id: String,
    pub parts: Vec<PartDescriptor>,
}

/// Instance-based model: the training descriptors plus query parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnncModel {
    /// Neighborhood size.
    pub neighbors: usize,
    pub metric: Metric,
    pub train: Vec<TrainExample>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub train_index: usize,
    pub distance: f64,
    pub hidden: PartDescriptor,
}

/// The nearest training images, sorted by ascending distance (ties by lowest
/// training index), carrying their hidden-part descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSet {
    pub hidden_part: usize,
    pub entries: Vec<Neighbor>,
}

/// Diverse subset of a neighbor set: per-cluster medoids, padded from the
/// remaining ranks when clusters collapse onto duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiverseSelection {
    pub entries: Vec<Neighbor>,
    /// How many entries were rank-order padding rather than cluster medoids.
    pub padded: usize,
}

/// Find the `k` training images minimizing the summed visible-part distance
/// to the query.
pub fn cnnc_neighbors(
    query: &HolisticDescriptor,
    train: &[TrainExample],
    k: usize,
    metric: Metric,
) -> Result<NeighborSet> {
    if train.is_empty() {
        return Err(Error::EmptyInput("cnnc training set"));
    }
    if k == 0 || k > train.len() {
        return Err(Error::InvalidParameter(format!(
            "neighbor count must be in 1..={}, got {k}",
            train.len()
        )));
    }
    let hidden_part = query.single_hidden()?;
    let visible = query.visible_indices();

    for (i, ex) in train.iter().enumerate() {
        if ex.parts.len() != query.len() {
            return Err(Error::DimensionMismatch {
                expected: query.len(),
                got: ex.parts.len(),
            });
        }
        for &j in &visible {
            if ex.parts[j].len() != query.part(j).unwrap().len() {
                return Err(Error::InvalidQuery(format!(
                    "training image {i} part {j} has {} dims, query has {}",
                    ex.parts[j].len(),
                    query.part(j).unwrap().len()
                )));
            }
        }
    }

    let mut scored: Vec<(usize, f64)> = train
        .iter()
        .enumerate()
        .map(|(i, ex)| {
            let d = visible
                .iter()
                .map(|&j| metric.distance(query.part(j).unwrap().values(), ex.parts[j].values()))
                .sum();
            (i, d)
        })
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let entries = scored[..k]
        .iter()
        .map(|&(i, distance)| Neighbor {
            train_index: i,
            distance,
            hidden: train[i].parts[hidden_part].clone(),
        })
        .collect();
    Ok(NeighborSet { hidden_part, entries })
}

/// Average consensus: the element-wise mean of the neighbors' hidden-part
/// descriptors, accumulated in rank order.
pub fn cnnc_consensus(neighbors: &NeighborSet) -> Result<PartDescriptor> {
    if neighbors.entries.is_empty() {
        return Err(Error::EmptyInput("neighbor set"));
    }
    let dim = neighbors.entries[0].hidden.len();
    let mut sum = vec![0.0; dim];
    for n in &neighbors.entries {
        if n.hidden.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: n.hidden.len() });
        }
        for (s, v) in sum.iter_mut().zip(n.hidden.values()) {
            *s += v;
        }
    }
    let count = neighbors.entries.len() as f64;
    for s in sum.iter_mut() {
        *s /= count;
    }
    PartDescriptor::new(sum)
}

/// Diversity operator: k-means with `d` clusters over the hidden-part
/// descriptors, then one medoid per cluster (the member nearest its
/// centroid). Duplicate-heavy sets can yield fewer than `d` distinct medoids;
/// missing slots are padded with the best remaining ranks.
pub fn cnnc_diverse(neighbors: &NeighborSet, d: usize, seed: u64) -> Result<DiverseSelection> {
    let n = neighbors.entries.len();
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!(
            "diverse count must be in 1..={n}, got {d}"
        )));
    }
    let data: Vec<Vec<f64>> = neighbors
        .entries
        .iter()
        .map(|e| e.hidden.values().to_vec())
        .collect();
    let fit = kmeans::fit(&data, d, seed, &KMeansOptions::default())?;

    let mut selected: Vec<usize> = Vec::with_capacity(d);
    for c in 0..d {
        let medoid = fit
            .assignments
            .iter()
            .enumerate()
            .filter(|&(_, &a)| a == c)
            .map(|(i, _)| (i, squared_l2(&data[i], &fit.centroids[c])))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i);
        if let Some(i) = medoid {
            if !selected.contains(&i) {
                selected.push(i);
            }
        }
    }
    let padded = d - selected.len();
    if padded > 0 {
        log::warn!(
            "diversity clustering produced {} distinct medoids for d={d}; padding from ranks",
            selected.len()
        );
        for i in 0..n {
            if selected.len() == d {
                break;
            }
            if !selected.contains(&i) {
                selected.push(i);
            }
        }
    }
    selected.sort_unstable();
    Ok(DiverseSelection {
        entries: selected
            .into_iter()
            .map(|i| neighbors.entries[i].clone())
            .collect(),
        padded,
    })
}
