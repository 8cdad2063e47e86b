use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::eigen::top_eigenpairs;
use super::{DistanceMatrix, NumericsError};
use crate::embedstore::EmbeddingMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    #[default]
    Mds,
    Pca,
}

impl fmt::Display for ProjectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProjectionMethod::Mds => "mds",
            ProjectionMethod::Pca => "pca",
        })
    }
}

impl FromStr for ProjectionMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mds" => Ok(ProjectionMethod::Mds),
            "pca" => Ok(ProjectionMethod::Pca),
            other => Err(format!(
                "unknown projection method {other:?} (expected mds or pca)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    pub method: ProjectionMethod,
    pub points: Vec<[f64; 2]>,
}

impl Projection2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// On-disk projection of one lemma, as served to the annotation frontend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionExport {
    pub lemma: String,
    pub method: ProjectionMethod,
    pub ids: Vec<String>,
    pub points: Vec<[f64; 2]>,
    pub clusters: Vec<usize>,
}

fn require_three(n: usize) -> Result<(), NumericsError> {
    if n < 3 {
        return Err(NumericsError::InvalidParameter(format!(
            "projection needs at least 3 points, got {n}"
        )));
    }
    Ok(())
}

/// Centers each axis and flips it so its first clearly nonzero coordinate is positive.
fn canonicalize(points: &mut [[f64; 2]]) {
    let n = points.len() as f64;
    for axis in 0..2 {
        let mean = points.iter().map(|p| p[axis]).sum::<f64>() / n;
        for p in points.iter_mut() {
            p[axis] -= mean;
        }
        if let Some(first) = points.iter().map(|p| p[axis]).find(|x| x.abs() > 1e-12) {
            if first < 0.0 {
                for p in points.iter_mut() {
                    p[axis] = -p[axis];
                }
            }
        }
    }
}

/// Embeds `n` points with eigen-coordinates of a Gram-like matrix.
fn gram_coordinates(gram: &[f64], n: usize) -> Vec<[f64; 2]> {
    let pairs = top_eigenpairs(gram, n, 2);
    let mut points = vec![[0.0; 2]; n];
    for (axis, pair) in pairs.iter().enumerate() {
        let scale = pair.value.max(0.0).sqrt();
        for (p, v) in points.iter_mut().zip(&pair.vector) {
            p[axis] = v * scale;
        }
    }
    points
}

/// Classical (Torgerson) MDS to two dimensions. Negative eigenvalues of the
/// double-centered matrix are clamped to zero.
pub fn classical_mds(d: &DistanceMatrix) -> Result<Projection2D, NumericsError> {
    let n = d.n();
    require_three(n)?;
    let sq: Vec<f64> = d.values().iter().map(|v| v * v).collect();
    let row_mean: Vec<f64> = (0..n)
        .map(|i| sq[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let mut b = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            b[i * n + j] = -0.5 * (sq[i * n + j] - row_mean[i] - row_mean[j] + grand);
        }
    }
    let mut points = gram_coordinates(&b, n);
    canonicalize(&mut points);
    Ok(Projection2D {
        method: ProjectionMethod::Mds,
        points,
    })
}

/// Projection onto the two leading principal axes of the mean-centered rows.
pub fn pca2(m: &EmbeddingMatrix) -> Result<Projection2D, NumericsError> {
    let n = m.n();
    require_three(n)?;
    let dim = m.dim();
    let mut x: Vec<Vec<f64>> = m
        .rows()
        .map(|r| r.iter().map(|&v| f64::from(v)).collect())
        .collect();
    for c in 0..dim {
        let mean = x.iter().map(|r| r[c]).sum::<f64>() / n as f64;
        for r in x.iter_mut() {
            r[c] -= mean;
        }
    }

    let mut points = if dim <= n {
        // Covariance route: d x d scatter matrix, scores = X v.
        let mut scatter = vec![0.0; dim * dim];
        for r in &x {
            for a in 0..dim {
                for b in 0..dim {
                    scatter[a * dim + b] += r[a] * r[b];
                }
            }
        }
        let pairs = top_eigenpairs(&scatter, dim, 2);
        x.iter()
            .map(|r| {
                let mut p = [0.0; 2];
                for (axis, pair) in pairs.iter().enumerate() {
                    p[axis] = r.iter().zip(&pair.vector).map(|(a, b)| a * b).sum();
                }
                p
            })
            .collect()
    } else {
        // Gram route for wide matrices: scores = u * sqrt(lambda).
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| a * b).sum();
                gram[i * n + j] = v;
                gram[j * n + i] = v;
            }
        }
        gram_coordinates(&gram, n)
    };
    canonicalize(&mut points);
    Ok(Projection2D {
        method: ProjectionMethod::Pca,
        points,
    })
}
