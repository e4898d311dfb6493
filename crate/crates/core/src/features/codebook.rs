//! Shared vector-quantization codebook.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::PartDescriptor;
use crate::io::atomic_write;
use crate::kmeans::{self, KMeansOptions};

pub const CODEBOOK_FILE_VERSION: u32 = 1;

/// K learned centroids in descriptor or patch space. Quantization maps a
/// vector to the index of its nearest centroid under L2, ties to the lowest
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    k: usize,
    dim: usize,
    centroids: Vec<Vec<f64>>,
    trained_on: String,
}

#[derive(Serialize, Deserialize)]
struct CodebookFile {
    version: u32,
    k: usize,
    dim: usize,
    centroids: Vec<Vec<f64>>,
    trained_on: String,
}

impl Codebook {
    /// Build from explicit centroids; validates K >= 2, uniform dimension,
    /// and pairwise-distinct centroids.
    pub fn from_centroids(centroids: Vec<Vec<f64>>, trained_on: String) -> Result<Self> {
        let k = centroids.len();
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "codebook needs at least 2 centroids, got {k}"
            )));
        }
        let dim = centroids[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter("zero-dimensional centroids".into()));
        }
        for c in &centroids {
            if c.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: c.len() });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite centroid entry".into()));
            }
        }
        for i in 0..k {
            for j in i + 1..k {
                if centroids[i] == centroids[j] {
                    return Err(Error::InvalidParameter(format!(
                        "centroids {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Codebook { k, dim, centroids, trained_on })
    }

    /// Train with k-means (k-means++ seeding, L2, run to convergence at
    /// relative inertia change < 1e-4 or 300 iterations). Requires at least
    /// `k` distinct inputs.
    pub fn train(inputs: &[Vec<f64>], k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!(
                "codebook size must be at least 2, got {k}"
            )));
        }
        let distinct: HashSet<Vec<u64>> = inputs
            .iter()
            .map(|v| v.iter().map(|x| x.to_bits()).collect())
            .collect();
        if distinct.len() < k {
            return Err(Error::TooFewDistinctInputs { needed: k, distinct: distinct.len() });
        }
        let fit = kmeans::fit(inputs, k, seed, &KMeansOptions::default())?;
        Codebook::from_centroids(fit.centroids, fingerprint(inputs))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trained_on(&self) -> &str {
        &self.trained_on
    }

    pub fn centroid(&self, i: usize) -> &[f64] {
        &self.centroids[i]
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    /// Index of the nearest centroid under L2; ties break to the lowest
    /// index.
    pub fn quantize(&self, v: &[f64]) -> Result<usize> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(kmeans::nearest(v, &self.centroids).0)
    }

    /// Centroid `i` reinterpreted as a part descriptor. Only valid for
    /// codebooks trained in descriptor space, where centroids stay on the
    /// simplex.
    pub fn centroid_descriptor(&self, i: usize) -> Result<PartDescriptor> {
        PartDescriptor::new(self.centroids[i].clone())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CodebookFile {
            version: CODEBOOK_FILE_VERSION,
            k: self.k,
            dim: self.dim,
            centroids: self.centroids.clone(),
            trained_on: self.trained_on.clone(),
        };
        let json = serde_json::to_vec_pretty(&file)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        atomic_write(path, &json)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let file: CodebookFile = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Json { path: path.into(), source: e })?;
        if file.version != CODEBOOK_FILE_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported codebook version {}",
                file.version
            )));
        }
        if file.k != file.centroids.len() {
            return Err(Error::InvalidParameter(format!(
                "codebook declares K={} but has {} centroids",
                file.k,
                file.centroids.len()
            )));
        }
        Codebook::from_centroids(file.centroids, file.trained_on)
    }
}

/// Short content fingerprint of the training inputs.
pub fn fingerprint(inputs: &[Vec<f64>]) -> String {
    let mut hasher = Sha256::new();
    hasher.update((inputs.len() as u64).to_le_bytes());
    for v in inputs {
        hasher.update((v.len() as u64).to_le_bytes());
        for x in v {
            hasher.update(x.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::squared_l2;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn two_cluster_data() -> Vec<Vec<f64>> {
        let mut rng = StdRng::seed_from_u64(21);
        let mut data = Vec::new();
        for _ in 0..30 {
            data.push(vec![rng.random::<f64>() * 0.1, rng.random::<f64>() * 0.1]);
        }
        for _ in 0..30 {
            data.push(vec![5.0 + rng.random::<f64>() * 0.1, 5.0 + rng.random::<f64>() * 0.1]);
        }
        data
    }

    #[test]
    fn train_recovers_cluster_means() {
        let data = two_cluster_data();
        let cb = Codebook::train(&data, 2, 4).unwrap();

        let mean = |points: &[Vec<f64>]| -> Vec<f64> {
            let mut m = vec![0.0; 2];
            for p in points {
                m[0] += p[0];
                m[1] += p[1];
            }
            vec![m[0] / points.len() as f64, m[1] / points.len() as f64]
        };
        let low = mean(&data[..30]);
        let high = mean(&data[30..]);
        let mut got = cb.centroids().to_vec();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!(squared_l2(&got[0], &low) < 1e-18);
        assert!(squared_l2(&got[1], &high) < 1e-18);
    }

    #[test]
    fn train_is_deterministic() {
        let data = two_cluster_data();
        let a = Codebook::train(&data, 4, 7).unwrap();
        let b = Codebook::train(&data, 4, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn train_with_k_equal_to_distinct_points() {
        let data = vec![
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
        ];
        let cb = Codebook::train(&data, 3, 0).unwrap();
        let mut got = cb.centroids().to_vec();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        assert_eq!(got, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn train_rejects_too_few_distinct_inputs() {
        let data = vec![vec![1.0, 2.0]; 8];
        assert!(matches!(
            Codebook::train(&data, 2, 0),
            Err(Error::TooFewDistinctInputs { needed: 2, distinct: 1 })
        ));
    }

    #[test]
    fn quantize_maps_centroids_to_themselves() {
        let data = two_cluster_data();
        let cb = Codebook::train(&data, 4, 11).unwrap();
        for i in 0..cb.k() {
            assert_eq!(cb.quantize(cb.centroid(i)).unwrap(), i);
        }
    }

    #[test]
    fn quantize_breaks_ties_to_lowest_index() {
        let cb = Codebook::from_centroids(
            vec![vec![0.0, 0.0], vec![2.0, 0.0]],
            "test".into(),
        )
        .unwrap();
        assert_eq!(cb.quantize(&[1.0, 0.0]).unwrap(), 0);
    }

    #[test]
    fn quantize_matches_exhaustive_scan() {
        let mut rng = StdRng::seed_from_u64(33);
        let data: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let cb = Codebook::train(&data, 6, 1).unwrap();
        for _ in 0..100 {
            let q: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let brute = (0..cb.k())
                .min_by(|&a, &b| {
                    squared_l2(&q, cb.centroid(a)).total_cmp(&squared_l2(&q, cb.centroid(b)))
                })
                .unwrap();
            assert_eq!(cb.quantize(&q).unwrap(), brute);
        }
    }

    #[test]
    fn quantize_rejects_dimension_mismatch() {
        let cb = Codebook::from_centroids(vec![vec![0.0], vec![1.0]], "test".into()).unwrap();
        assert!(matches!(
            cb.quantize(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("codebook.json");
        let cb = Codebook::train(&two_cluster_data(), 3, 2).unwrap();
        cb.save(&path).unwrap();
        let loaded = Codebook::load(&path).unwrap();
        assert_eq!(cb, loaded);
    }
}
