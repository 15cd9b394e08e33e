//! Weighted resolvent profiles: the norm of ⟨A⟩^{-1}(λ + iη - H)^{-1}⟨A⟩^{-1}
//! as η walks toward the real axis. A plateau is evidence of a limiting bound;
//! 1/η growth pins a point eigenvalue contribution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::eigh;
use crate::error::{Error, Result};
use crate::linalg;
use crate::operator::OperatorMatrix;

#[derive(Debug, Clone)]
pub struct LapProfile {
    pub lambda: f64,
    /// (η, norm) in the order supplied.
    pub points: Vec<(f64, f64)>,
    /// 10 × mean level spacing near λ; norms below this η are finite-size
    /// artifacts.
    pub resolution_floor: f64,
    /// ηs that fell below the floor.
    pub flagged: Vec<f64>,
}

/// Weighted resolvent norms ‖⟨A⟩^{-1}(λ + iη - H)^{-1}⟨A⟩^{-1}‖ for each η.
///
/// ⟨A⟩^{-1} = (I + A²)^{-1/2} is taken through the eigendecomposition of
/// I + A²; the resolvent goes through the decomposition of H, so each η costs
/// one power iteration with O(n²) applies.
pub fn lap_probe(
    h: &OperatorMatrix,
    a: &OperatorMatrix,
    lambda: f64,
    etas: &[f64],
) -> Result<LapProfile> {
    if h.space != a.space {
        return Err(Error::SpaceMismatch(h.space.to_string(), a.space.to_string()));
    }
    if !h.hermitian || !a.hermitian {
        return Err(Error::NotHermitian);
    }
    if etas.iter().any(|&e| e <= 0.0) {
        return Err(Error::ZeroEta);
    }
    let n = h.dim();

    // I + A² stays real for real A and for purely imaginary A (A = iB with
    // B real antisymmetric gives I + A² = I - B²)
    let a2 = weight_gram(&a.data);
    let w = inverse_sqrt(&a2);

    let sd = eigh(h)?;
    // M = W · V_H, so the weighted resolvent is M diag(1/(λ+iη-λ_j)) M^*
    let m1 = &w * &sd.eigenvectors;
    let m1_adj = m1.adjoint();

    let points: Vec<(f64, f64)> = crate::par::map_indexed(etas.len(), |i| {
        let eta = etas[i];
        let denoms: Vec<Complex64> = sd
            .eigenvalues
            .iter()
            .map(|&l| Complex64::new(1.0, 0.0) / Complex64::new(lambda - l, eta))
            .collect();
        let apply = |v: &DVector<Complex64>| -> DVector<Complex64> {
            let mut u = &m1_adj * v;
            for (k, c) in u.iter_mut().enumerate() {
                *c *= denoms[k];
            }
            &m1 * u
        };
        let apply_adj = |v: &DVector<Complex64>| -> DVector<Complex64> {
            let mut u = &m1_adj * v;
            for (k, c) in u.iter_mut().enumerate() {
                *c *= denoms[k].conj();
            }
            &m1 * u
        };
        // power iteration on G^* G with a fixed start vector
        let mut v = DVector::from_fn(n, |j, _| Complex64::new(1.0 + j as f64 * 1e-3, 0.0));
        v /= Complex64::new(v.norm(), 0.0);
        let mut sigma = 0.0f64;
        for _ in 0..200 {
            let u = apply_adj(&apply(&v));
            let norm = u.norm();
            if norm == 0.0 {
                return (eta, 0.0);
            }
            let next = norm.sqrt();
            let done = (next - sigma).abs() <= 1e-5 * next.max(1e-300);
            sigma = next;
            v = u / Complex64::new(norm, 0.0);
            if done {
                break;
            }
        }
        (eta, sigma)
    });

    let floor = resolution_floor(&sd.eigenvalues, lambda);
    let flagged = etas.iter().copied().filter(|&e| e < floor).collect();
    Ok(LapProfile { lambda, points, resolution_floor: floor, flagged })
}

/// I + A², routed through a real representation when the entries allow it.
fn weight_gram(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let all_imag = a.iter().all(|z| z.re.abs() <= 1e-13 * scale);
    if let Some(re) = linalg::try_real(a) {
        let g = DMatrix::<f64>::identity(n, n) + &re * &re;
        return g.map(|x| Complex64::new(x, 0.0));
    }
    if all_imag {
        let b = DMatrix::from_fn(n, n, |i, j| a[(i, j)].im);
        let g = DMatrix::<f64>::identity(n, n) - &b * &b;
        return g.map(|x| Complex64::new(x, 0.0));
    }
    DMatrix::<Complex64>::identity(n, n) + a * a
}

/// (positive definite Hermitian)^{-1/2} by eigendecomposition.
fn inverse_sqrt(g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (vals, vecs) = linalg::eigh(g);
    let n = g.nrows();
    let mut scaled = DMatrix::zeros(n, n);
    for (k, &mu) in vals.iter().enumerate() {
        assert!(mu > 0.0, "weight gram matrix must be positive definite");
        scaled.set_column(k, &(vecs.column(k) * Complex64::new(1.0 / mu.sqrt(), 0.0)));
    }
    &scaled * vecs.adjoint()
}

/// 10 × mean spacing of the eigenvalues within a small window of λ.
fn resolution_floor(eigenvalues: &[f64], lambda: f64) -> f64 {
    let n = eigenvalues.len();
    if n < 2 {
        return 0.0;
    }
    let range = eigenvalues[n - 1] - eigenvalues[0];
    let width = 0.05 * range.max(1e-300);
    let local: Vec<f64> = eigenvalues
        .iter()
        .copied()
        .filter(|l| (l - lambda).abs() <= width)
        .collect();
    let spacing = if local.len() >= 2 {
        (local[local.len() - 1] - local[0]) / (local.len() - 1) as f64
    } else {
        range / (n - 1) as f64
    };
    10.0 * spacing
}
