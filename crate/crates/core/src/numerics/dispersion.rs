use rand::seq::SliceRandom;

use super::{NumericsError, Projection2D};
use crate::seed;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Index of the maximum, lowest index on ties.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// Farthest-point sampling over projected points: start from the point
/// farthest from the centroid, then repeatedly add the point whose distance
/// to the picked set is largest. Ties go to the lowest index. The seed only
/// matters when every point coincides.
pub fn suggest_dispersed(
    p: &Projection2D,
    m: usize,
    seed: u64,
) -> Result<Vec<usize>, NumericsError> {
    let n = p.len();
    if m == 0 || m > n {
        return Err(NumericsError::InvalidParameter(format!(
            "suggestion count {m} must be in 1..={n}"
        )));
    }
    let pts = &p.points;
    let centroid = [
        pts.iter().map(|q| q[0]).sum::<f64>() / n as f64,
        pts.iter().map(|q| q[1]).sum::<f64>() / n as f64,
    ];
    if pts.iter().all(|q| *q == pts[0]) {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut seed::rng(seed));
        order.truncate(m);
        return Ok(order);
    }

    let first = argmax(pts.iter().map(|q| dist(*q, centroid)));
    let mut picked = vec![first];
    let mut taken = vec![false; n];
    taken[first] = true;
    let mut nearest: Vec<f64> = pts.iter().map(|q| dist(*q, pts[first])).collect();
    while picked.len() < m {
        let next = argmax(
            nearest
                .iter()
                .zip(&taken)
                .map(|(&d, &t)| if t { f64::NEG_INFINITY } else { d }),
        );
        picked.push(next);
        taken[next] = true;
        for (d, q) in nearest.iter_mut().zip(pts) {
            *d = d.min(dist(*q, pts[next]));
        }
    }
    Ok(picked)
}
