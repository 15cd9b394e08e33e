//! Shared dense linear-algebra kernels: Hermitian eigendecomposition with a
//! real fast path, singular values, deterministic power-iteration norms.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// The real part of a numerically-real matrix, or `None` if any entry has a
/// meaningful imaginary component.
pub fn try_real(m: &DMatrix<Complex64>) -> Option<DMatrix<f64>> {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m.iter().all(|z| z.im.abs() <= 1e-13 * scale.max(1.0)) {
        Some(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re))
    } else {
        None
    }
}

/// Symmetric eigendecomposition of a real matrix, eigenvalues ascending.
pub fn eigh_real(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigh: square matrix required");
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Hermitian eigendecomposition, eigenvalues ascending, eigenvectors as the
/// columns of the returned matrix. Numerically-real input is routed through
/// the much faster real symmetric solver.
pub fn eigh(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "eigh: square matrix required");
    if let Some(re) = try_real(m) {
        let (vals, vecs) = eigh_real(&re);
        let vecs = DMatrix::from_fn(n, n, |i, j| Complex64::new(vecs[(i, j)], 0.0));
        (vals, vecs)
    } else {
        let se = m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
        let vals: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let vecs = DMatrix::from_fn(n, n, |i, j| se.eigenvectors[(i, order[j])]);
        (vals, vecs)
    }
}

/// Top singular values of a general complex matrix, descending.
pub fn singular_values(m: &DMatrix<Complex64>, k: usize) -> Vec<f64> {
    let svd = m.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s.truncate(k);
    s
}

/// Spectral norm by deterministic power iteration on `m^* m`.
pub fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    op_norm_tol(m, 1e-11, 500)
}

/// Power iteration with explicit tolerance and iteration cap. The start
/// vector is fixed, so results are reproducible across runs and thread
/// counts.
pub fn op_norm_tol(m: &DMatrix<Complex64>, tol: f64, max_iter: usize) -> f64 {
    let n = m.ncols();
    if n == 0 || m.nrows() == 0 {
        return 0.0;
    }
    let adj = m.adjoint();
    let mut v = DVector::from_fn(n, |i, _| Complex64::new(1.0 + (i as f64) * 1e-3, 0.0));
    v /= Complex64::new(v.norm(), 0.0);
    let mut sigma = 0.0f64;
    for _ in 0..max_iter {
        let w = m * &v;
        let u = &adj * w;
        let norm = u.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        let done = (next - sigma).abs() <= tol * next.max(1.0);
        sigma = next;
        v = u / Complex64::new(norm, 0.0);
        if done {
            break;
        }
    }
    sigma
}
