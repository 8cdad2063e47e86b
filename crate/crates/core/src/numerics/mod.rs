//! Distances, clustering, 2D projection and dispersed-sentence suggestion over
//! per-lemma embedding matrices.

mod agglomerative;
mod dispersion;
mod distance;
pub mod eigen;
mod kmeans;
mod projection;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use agglomerative::{agglomerative, Linkage};
pub use dispersion::suggest_dispersed;
pub use distance::{pairwise_cosine_distance, DistanceMatrix};
pub use kmeans::{kmeans, kmeans_best_of, KMeansOptions, KMeansResult, DEFAULT_RESTARTS};
pub use projection::{classical_mds, pca2, Projection2D, ProjectionExport, ProjectionMethod};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("row {id:?} has zero norm")]
    ZeroNorm { id: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),
}

/// Cluster assignment per row. Labels are compacted to `0..k` in order of
/// first appearance, so row 0 is always in cluster 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabels {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl ClusterLabels {
    pub fn compact(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        ClusterLabels {
            labels,
            k: map.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Cluster sizes indexed by label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

fn check_k(k: usize, n: usize) -> Result<(), NumericsError> {
    if k == 0 || k > n {
        return Err(NumericsError::InvalidParameter(format!(
            "cluster count {k} must be in 1..={n}"
        )));
    }
    Ok(())
}
