use rand::Rng;

use super::{check_k, ClusterLabels, NumericsError};
use crate::embedstore::EmbeddingMatrix;
use crate::seed;

/// Restarts used when callers do not choose; enough that small inputs reliably
/// reach the best partition.
pub const DEFAULT_RESTARTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop once no center moves farther than this.
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            max_iter: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: ClusterLabels,
    /// Sum of squared distances of the normalized rows to their centers.
    pub inertia: f64,
    /// Inertia after every assignment step, in order.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// L2-normalized rows in f64.
pub(crate) fn normalized_rows(m: &EmbeddingMatrix) -> Result<Vec<Vec<f64>>, NumericsError> {
    m.rows()
        .enumerate()
        .map(|(i, r)| {
            let v: Vec<f64> = r.iter().map(|&x| f64::from(x)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(NumericsError::ZeroNorm {
                    id: m.ids()[i].clone(),
                });
            }
            Ok(v.into_iter().map(|x| x / norm).collect())
        })
        .collect()
}

/// Greedy k-means++: each step samples a few candidates in proportion to
/// their squared distance from the chosen centers and keeps the one that
/// lowers the total potential most.
fn plus_plus_seeding(points: &[Vec<f64>], k: usize, rng: &mut seed::Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let trials = 2 + (k as f64).ln().floor() as usize;
    let mut chosen = vec![rng.gen_range(0..n)];
    let mut nearest: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut best: Option<(f64, usize)> = None;
            for _ in 0..trials {
                let candidate = sample_weighted(&nearest, rng.gen::<f64>() * total);
                let potential: f64 = points
                    .iter()
                    .zip(&nearest)
                    .map(|(p, &d)| d.min(sq_dist(p, &points[candidate])))
                    .sum();
                if best.map_or(true, |(b, _)| potential < b) {
                    best = Some((potential, candidate));
                }
            }
            best.expect("at least one trial").1
        } else {
            // Every remaining point coincides with a center.
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn sample_weighted(weights: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if w > 0.0 && acc > target {
            return i;
        }
    }
    // Rounding can leave the cumulative sum just short of target.
    weights.iter().rposition(|&w| w > 0.0).unwrap()
}

fn assign(points: &[Vec<f64>], centers: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.iter().enumerate() {
                let d = sq_dist(p, center);
                if d < best.1 {
                    best = (c, d);
                }
            }
            inertia += best.1;
            best.0
        })
        .collect();
    (labels, inertia)
}

/// Spherical k-means: k-means++ seeding then Lloyd iterations on
/// L2-normalized rows, finished with single-point transfers that Lloyd cannot
/// see. Deterministic for a fixed seed.
pub fn kmeans(
    m: &EmbeddingMatrix,
    k: usize,
    seed: u64,
    options: KMeansOptions,
) -> Result<KMeansResult, NumericsError> {
    check_k(k, m.n())?;
    let points = normalized_rows(m)?;
    Ok(lloyd(&points, k, seed, options))
}

pub(crate) fn lloyd(
    points: &[Vec<f64>],
    k: usize,
    seed: u64,
    options: KMeansOptions,
) -> KMeansResult {
    let mut rng = seed::rng(seed);
    let dim = points[0].len();
    let mut centers = plus_plus_seeding(points, k, &mut rng);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let (mut labels, mut inertia) = assign(points, &centers);
    trace.push(inertia);
    while iterations < options.max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut movement: f64 = 0.0;
        for c in 0..k {
            // An emptied cluster keeps its previous center.
            if counts[c] == 0 {
                continue;
            }
            let new: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            movement = movement.max(sq_dist(&new, &centers[c]).sqrt());
            centers[c] = new;
        }
        let (l, i) = assign(points, &centers);
        labels = l;
        inertia = i;
        trace.push(inertia);
        if movement < options.tol {
            break;
        }
    }
    if transfer_refine(points, &mut labels, k, options.max_iter) {
        let centers = centroids(points, &labels, k);
        let (l, i) = assign(points, &centers);
        labels = l;
        inertia = i;
        trace.push(inertia);
    }
    KMeansResult {
        labels: ClusterLabels::compact(&labels),
        inertia,
        inertia_trace: trace,
        iterations,
    }
}

fn centroids(points: &[Vec<f64>], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

/// Moves single points between clusters while that lowers the total squared
/// error. Moving `x` from `a` to `b` changes it by
/// `|b|/(|b|+1)·‖x−c_b‖² − |a|/(|a|−1)·‖x−c_a‖²`, which can be negative even
/// when `x` is already nearest to `c_a`. Returns whether anything moved.
fn transfer_refine(points: &[Vec<f64>], labels: &mut [usize], k: usize, max_passes: usize) -> bool {
    let mut centers = centroids(points, labels, k);
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    let mut moved_any = false;
    for _ in 0..max_passes {
        let mut moved = false;
        for (i, p) in points.iter().enumerate() {
            let a = labels[i];
            if counts[a] < 2 {
                continue;
            }
            let na = counts[a] as f64;
            let removal = na / (na - 1.0) * sq_dist(p, &centers[a]);
            let mut best = (a, 0.0);
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let delta = nb / (nb + 1.0) * sq_dist(p, &centers[b]) - removal;
                // Relative slack keeps rounding noise from cycling points.
                if delta < best.1 - 1e-12 * removal.max(1e-300) {
                    best = (b, delta);
                }
            }
            let b = best.0;
            if b == a {
                continue;
            }
            let nb = counts[b] as f64;
            for (c, x) in centers[a].iter_mut().zip(p) {
                *c = (*c * na - x) / (na - 1.0);
            }
            for (c, x) in centers[b].iter_mut().zip(p) {
                *c = (*c * nb + x) / (nb + 1.0);
            }
            counts[a] -= 1;
            counts[b] += 1;
            labels[i] = b;
            moved = true;
        }
        if !moved {
            break;
        }
        moved_any = true;
    }
    moved_any
}

/// Runs `restarts` independently seeded k-means and keeps the lowest inertia
/// (earliest run on ties).
pub fn kmeans_best_of(
    m: &EmbeddingMatrix,
    k: usize,
    seed: u64,
    restarts: usize,
    options: KMeansOptions,
) -> Result<KMeansResult, NumericsError> {
    check_k(k, m.n())?;
    let points = normalized_rows(m)?;
    let mut best: Option<KMeansResult> = None;
    for r in 0..restarts.max(1) {
        let run = lloyd(
            &points,
            k,
            seed::derive(seed, &format!("restart-{r}")),
            options,
        );
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}
