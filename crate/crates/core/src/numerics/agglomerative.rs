use serde::{Deserialize, Serialize};

use super::{check_k, ClusterLabels, DistanceMatrix, NumericsError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
}

/// Bottom-up average-linkage clustering, merging until `k` clusters remain.
///
/// A cluster is identified by its smallest member index. The pair with the
/// smallest mean inter-cluster distance merges first; ties go to the
/// lexicographically smallest `(i, j)` pair of identifiers.
pub fn agglomerative(
    d: &DistanceMatrix,
    k: usize,
    linkage: Linkage,
) -> Result<ClusterLabels, NumericsError> {
    let Linkage::Average = linkage;
    let n = d.n();
    check_k(k, n)?;

    // Sum of member-pair distances between clusters, indexed by identifier.
    let mut sums: Vec<f64> = d.values().to_vec();
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut owner: Vec<usize> = (0..n).collect();

    while active.len() > k {
        let mut best: Option<(f64, usize, usize)> = None;
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                let avg = sums[i * n + j] / (size[i] * size[j]) as f64;
                if best.map_or(true, |(b, _, _)| avg < b) {
                    best = Some((avg, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two active clusters");
        for &x in &active {
            if x != i && x != j {
                let merged = sums[i * n + x] + sums[j * n + x];
                sums[i * n + x] = merged;
                sums[x * n + i] = merged;
            }
        }
        size[i] += size[j];
        active.retain(|&x| x != j);
        for o in owner.iter_mut() {
            if *o == j {
                *o = i;
            }
        }
    }
    Ok(ClusterLabels::compact(&owner))
}
