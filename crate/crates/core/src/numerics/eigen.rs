//! Leading eigenpairs of small dense symmetric matrices by power iteration
//! with deflation.

pub const MAX_ITER: usize = 1000;
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

fn matvec(a: &[f64], n: usize, v: &[f64], shift: f64, out: &mut [f64]) {
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        out[i] = row.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() + shift * v[i];
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
}

/// Fixed, irregular start vector so runs are reproducible and unlikely to be
/// orthogonal to the dominant eigenvector.
fn start_vector(n: usize, basis: &[Vec<f64>]) -> Vec<f64> {
    let mut state: u64 = 0x2545_f491_4f6c_dd1d;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    project_out(&mut v, basis);
    let nv = norm(&v);
    if nv > 0.0 {
        v.iter_mut().for_each(|x| *x /= nv);
    } else if let Some(first) = v.first_mut() {
        *first = 1.0;
    }
    v
}

/// Power iteration on `a + shift*I` restricted to the orthogonal complement of
/// `basis`. Returns the Rayleigh quotient of `a` itself and whether the
/// residual dropped below tolerance.
fn power(a: &[f64], n: usize, shift: f64, basis: &[Vec<f64>]) -> (EigenPair, bool) {
    let mut v = start_vector(n, basis);
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        matvec(a, n, &v, shift, &mut w);
        project_out(&mut w, basis);
        let shifted = dot(&v, &w);
        lambda = shifted - shift;
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - shifted * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        let nw = norm(&w);
        if residual < RESIDUAL_TOL || nw == 0.0 {
            converged = true;
            break;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    (
        EigenPair {
            value: lambda,
            vector: v,
        },
        converged,
    )
}

fn gershgorin(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// The algebraically largest eigenpair orthogonal to `basis`.
fn largest(a: &[f64], n: usize, basis: &[Vec<f64>]) -> EigenPair {
    let (plain, converged) = power(a, n, 0.0, basis);
    if converged && plain.value >= 0.0 {
        return plain;
    }
    // The dominant-magnitude eigenvalue was negative (or iteration stalled):
    // shift the spectrum to be non-negative so the top of it dominates.
    let shift = if converged {
        -plain.value
    } else {
        gershgorin(a, n)
    };
    let (shifted, _) = power(a, n, shift, basis);
    if !converged && plain.value > shifted.value {
        plain
    } else {
        shifted
    }
}

/// The `count` algebraically largest eigenpairs of the symmetric `n x n`
/// row-major matrix `a`, in decreasing order, with unit eigenvectors.
pub fn top_eigenpairs(a: &[f64], n: usize, count: usize) -> Vec<EigenPair> {
    assert_eq!(a.len(), n * n, "matrix shape");
    let count = count.min(n);
    let mut deflated = a.to_vec();
    let mut pairs: Vec<EigenPair> = Vec::with_capacity(count);
    for _ in 0..count {
        let basis: Vec<Vec<f64>> = pairs.iter().map(|p| p.vector.clone()).collect();
        let pair = largest(&deflated, n, &basis);
        for i in 0..n {
            for j in 0..n {
                deflated[i * n + j] -= pair.value * pair.vector[i] * pair.vector[j];
            }
        }
        pairs.push(pair);
    }
    pairs
}
