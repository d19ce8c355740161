//! Dense real vector helpers for the small (`d <= ~20`) problems in this crate.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &mut [f64], s: f64) {
    a.iter_mut().for_each(|x| *x *= s);
}

/// `a -= s * b`
pub fn axpy_neg(a: &mut [f64], s: f64, b: &[f64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x -= s * y);
}

/// Removes from `v` its components along the orthonormal rows of `basis`.
///
/// Two passes of modified Gram-Schmidt; the second pass restores
/// orthogonality lost to cancellation when `v` is nearly in the span.
pub fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(v, q);
            axpy_neg(v, c, q);
        }
    }
}

/// Orthonormalizes `vectors` in order with re-orthogonalizing modified
/// Gram-Schmidt.
///
/// Returns `None` if some vector has a residual norm below `rel_tol` times
/// its original norm, i.e. the set is numerically rank deficient.
pub fn orthonormalize(vectors: &[Vec<f64>], rel_tol: f64) -> Option<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let n0 = norm(v);
        if n0 == 0.0 {
            return None;
        }
        let mut w = v.clone();
        project_out(&mut w, &basis);
        let n = norm(&w);
        if n <= rel_tol * n0 {
            return None;
        }
        scale(&mut w, 1.0 / n);
        basis.push(w);
    }
    Some(basis)
}

/// Gram matrix `G[i][j] = <v_i|v_j>`.
pub fn gram(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    vectors
        .iter()
        .map(|a| vectors.iter().map(|b| dot(a, b)).collect())
        .collect()
}

/// Max elementwise deviation of `sum_j |v_j><v_j|` from the identity.
pub fn completeness_residual(vectors: &[Vec<f64>]) -> f64 {
    let n = vectors.first().map_or(0, Vec::len);
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in 0..n {
            let s: f64 = vectors.iter().map(|v| v[r] * v[c]).sum();
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((s - target).abs());
        }
    }
    worst
}
