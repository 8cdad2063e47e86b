use serde::{Deserialize, Serialize};

use super::NumericsError;
use crate::embedstore::EmbeddingMatrix;

/// Symmetric, zero-diagonal, non-negative distance matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry (within 1e-12), an exactly zero diagonal and
    /// non-negative finite entries.
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, NumericsError> {
        if values.len() != n * n {
            return Err(NumericsError::InvalidMatrix(format!(
                "{} values for a {n}x{n} matrix",
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(NumericsError::InvalidMatrix(format!(
                    "nonzero diagonal at {i}"
                )));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(NumericsError::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {v}"
                    )));
                }
                if (v - values[j * n + i]).abs() > 1e-12 {
                    return Err(NumericsError::InvalidMatrix(format!(
                        "asymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix { n, values })
    }

    /// Builds a matrix from a distance function evaluated on the upper triangle.
    pub fn from_fn(
        n: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, NumericsError> {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `1 - cos(x_i, x_j)`, clamped to `[0, 2]`, computed in f64.
pub fn pairwise_cosine_distance(m: &EmbeddingMatrix) -> Result<DistanceMatrix, NumericsError> {
    let rows: Vec<Vec<f64>> = m
        .rows()
        .map(|r| r.iter().map(|&v| f64::from(v)).collect())
        .collect();
    let norms: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if let Some(i) = norms.iter().position(|&x| x == 0.0) {
        return Err(NumericsError::ZeroNorm {
            id: m.ids()[i].clone(),
        });
    }
    DistanceMatrix::from_fn(rows.len(), |i, j| {
        if rows[i] == rows[j] {
            return 0.0;
        }
        let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
        (1.0 - dot / (norms[i] * norms[j])).clamp(0.0, 2.0)
    })
}
