//! Exact nearest-neighbor retrieval over an inventory of part descriptors.
//!
//! The index is a linear scan: results are exact for every metric. Ties in
//! distance break by ascending item id, so the ranking is invariant to
//! insertion order.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::features::PartDescriptor;

/// Immutable inventory of `(id, descriptor)` pairs under a fixed metric.
#[derive(Debug, Clone)]
pub struct InventoryIndex {
    ids: Vec<String>,
    descriptors: Vec<PartDescriptor>,
    metric: Metric,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub item_id: String,
    pub distance: f64,
}

/// Top-k retrieval result, sorted by ascending distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub k: usize,
    pub entries: Vec<RankedEntry>,
}

/// Build an index over all items. Exact linear-scan semantics; duplicate ids
/// and ragged dimensions are rejected.
pub fn build(items: Vec<(String, PartDescriptor)>, metric: Metric) -> Result<InventoryIndex> {
    if items.is_empty() {
        return Err(Error::EmptyInput("inventory"));
    }
    let dim = items[0].1.len();
    let mut seen = HashSet::with_capacity(items.len());
    let mut ids = Vec::with_capacity(items.len());
    let mut descriptors = Vec::with_capacity(items.len());
    for (id, d) in items {
        if d.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: d.len() });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateItemId(id));
        }
        ids.push(id);
        descriptors.push(d);
    }
    Ok(InventoryIndex { ids, descriptors, metric, dim })
}

impl InventoryIndex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// The `k` exact nearest items. Requesting more than the index holds
    /// returns the full inventory with a warning.
    pub fn query(&self, query_id: &str, q: &PartDescriptor, k: usize) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: q.len() });
        }
        if k > self.len() {
            log::warn!(
                "requested top-{k} from an index of {} items; returning all",
                self.len()
            );
        }
        let mut scored: Vec<(usize, f64)> = self
            .descriptors
            .iter()
            .enumerate()
            .map(|(i, d)| (i, self.metric.distance(q.values(), d.values())))
            .collect();
        scored.sort_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then_with(|| self.ids[a.0].cmp(&self.ids[b.0]))
        });
        let entries = scored
            .into_iter()
            .take(k)
            .map(|(i, distance)| RankedEntry {
                item_id: self.ids[i].clone(),
                distance,
            })
            .collect();
        Ok(RankedList {
            query_id: query_id.to_string(),
            k,
            entries,
        })
    }
}

/// Merge several ranked lists by round-robin interleaving, keeping the first
/// occurrence of each item, truncated to `k` entries. Used to combine the
/// two triad retrievals into one list.
pub fn interleave(lists: &[RankedList], k: usize) -> RankedList {
    let query_id = lists
        .first()
        .map(|l| l.query_id.clone())
        .unwrap_or_default();
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    let longest = lists.iter().map(|l| l.entries.len()).max().unwrap_or(0);
    'outer: for rank in 0..longest {
        for list in lists {
            if let Some(e) = list.entries.get(rank) {
                if seen.insert(e.item_id.clone()) {
                    entries.push(e.clone());
                    if entries.len() == k {
                        break 'outer;
                    }
                }
            }
        }
    }
    RankedList { query_id, k, entries }
}
