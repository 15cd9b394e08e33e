//! Band-projected commutator positivity at finite truncation.
//!
//! The certificate builds a smooth band filter Φ(H), pushes interior-site
//! probe vectors through it, and measures the extremal Rayleigh quotients of
//! the commutator on that span. Interior probes are the finite-volume
//! rendering of the inequality-up-to-compact: truncation-edge states see a
//! compact correction that is not small, so they are excluded from the test
//! subspace and tracked through the leakage diagnostic instead.

use nalgebra::{ComplexField, DMatrix};

use super::Bump;
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg;
use crate::operator::{OperatorMatrix, Space};
use crate::symbol::MourreConstants;

#[derive(Debug, Clone, Copy)]
pub struct MourreOptions {
    /// Fraction of sites in the middle of the box used as probe seeds.
    pub interior_fraction: f64,
    /// Plateau fraction of the band filter.
    pub plateau_fraction: f64,
    /// Certificate slack as a fraction of the lower constant c.
    pub tol_factor: f64,
    /// Probe-vector boundary-mass ceiling.
    pub leakage_limit: f64,
}

impl Default for MourreOptions {
    fn default() -> Self {
        Self {
            interior_fraction: 0.5,
            plateau_fraction: 0.5,
            tol_factor: 0.15,
            leakage_limit: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MourreVerdict {
    Certified,
    BoundaryContaminated,
    Failed,
}

impl std::fmt::Display for MourreVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            MourreVerdict::Certified => "certified",
            MourreVerdict::BoundaryContaminated => "boundary-contaminated",
            MourreVerdict::Failed => "failed",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone)]
pub struct MourreReport {
    pub interval: Interval,
    pub constants: MourreConstants,
    /// Extremal Rayleigh quotients of C over the whole band subspace Ran Φ(H).
    pub lambda_min_projected: f64,
    pub lambda_max_projected: f64,
    /// Extremal Rayleigh quotients over the interior probe span.
    pub lambda_min_interior: f64,
    pub lambda_max_interior: f64,
    pub n_test_vectors: usize,
    pub span_rank: usize,
    pub boundary_leakage: f64,
    pub tol: f64,
    pub verdict: MourreVerdict,
}

/// Certify c ≤ ⟨ψ, C ψ⟩/‖ψ‖² (and the symmetric upper check) for ψ in the
/// interior probe span of Ran Φ(H), Φ a bump on the interval.
pub fn mourre_verify(
    h: &OperatorMatrix,
    c_op: &OperatorMatrix,
    interval: Interval,
    constants: &MourreConstants,
    opts: MourreOptions,
) -> Result<MourreReport> {
    if h.space != c_op.space {
        return Err(Error::SpaceMismatch(h.space.to_string(), c_op.space.to_string()));
    }
    if !h.hermitian || !c_op.hermitian {
        return Err(Error::NotHermitian);
    }
    let core = match (linalg::try_real(&h.data), linalg::try_real(&c_op.data)) {
        (Some(hr), Some(cr)) => pipeline(&hr, &cr, h.space, interval, &opts)?,
        _ => pipeline(&h.data, &c_op.data, h.space, interval, &opts)?,
    };
    let tol = opts.tol_factor * constants.lower;
    let verdict = if core.span_rank == 0 || core.boundary_leakage >= opts.leakage_limit {
        MourreVerdict::BoundaryContaminated
    } else if core.lambda_min_interior >= constants.lower - tol {
        MourreVerdict::Certified
    } else {
        MourreVerdict::Failed
    };
    Ok(MourreReport {
        interval,
        constants: constants.clone(),
        lambda_min_projected: core.lambda_min_projected,
        lambda_max_projected: core.lambda_max_projected,
        lambda_min_interior: core.lambda_min_interior,
        lambda_max_interior: core.lambda_max_interior,
        n_test_vectors: core.n_test_vectors,
        span_rank: core.span_rank,
        boundary_leakage: core.boundary_leakage,
        tol,
        verdict,
    })
}

struct Core {
    lambda_min_projected: f64,
    lambda_max_projected: f64,
    lambda_min_interior: f64,
    lambda_max_interior: f64,
    n_test_vectors: usize,
    span_rank: usize,
    boundary_leakage: f64,
}

/// Interior probe sites: the middle `fraction` of the box.
fn interior_sites(space: Space, fraction: f64) -> Vec<usize> {
    match space {
        Space::HalfLine { n } => {
            let half_excl = (1.0 - fraction) / 2.0;
            let lo = (n as f64 * half_excl).floor() as usize;
            let hi = (n as f64 * (1.0 - half_excl)).ceil() as usize;
            (lo..hi.min(n)).collect()
        }
        Space::LatticeBox { dim, radius } => {
            let cut = (radius as f64 * fraction).ceil() as i64;
            let m = space.matrix_dim();
            (0..m)
                .filter(|&i| (0..dim).all(|axis| space.coordinate(i, axis).abs() <= cut))
                .collect()
        }
    }
}

fn pipeline<T>(
    h: &DMatrix<T>,
    c: &DMatrix<T>,
    space: Space,
    interval: Interval,
    opts: &MourreOptions,
) -> Result<Core>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = h.nrows();
    let se = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let bump = Bump::new(interval, opts.plateau_fraction);

    // spectral subspace carrying the band filter
    let selected: Vec<(usize, f64)> = order
        .iter()
        .filter_map(|&k| {
            let w = bump.eval(se.eigenvalues[k]);
            (w > 0.0).then_some((k, w))
        })
        .collect();
    if selected.is_empty() {
        return Ok(Core {
            lambda_min_projected: f64::NAN,
            lambda_max_projected: f64::NAN,
            lambda_min_interior: f64::NAN,
            lambda_max_interior: f64::NAN,
            n_test_vectors: 0,
            span_rank: 0,
            boundary_leakage: 1.0,
        });
    }
    let k = selected.len();
    let mut v_sel = DMatrix::<T>::zeros(n, k);
    for (col, &(idx, _)) in selected.iter().enumerate() {
        v_sel.set_column(col, &se.eigenvectors.column(idx));
    }

    // extremal Rayleigh quotients over the full band subspace
    let cv = c * &v_sel;
    let g_full = v_sel.adjoint() * &cv;
    let full_eigs = g_full.symmetric_eigen().eigenvalues;
    let lambda_min_projected = full_eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let lambda_max_projected = full_eigs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));

    // interior probe span, enlarged once if it collapses
    let mut fraction = opts.interior_fraction;
    loop {
        let sites = interior_sites(space, fraction);
        let m = sites.len();
        if m == 0 {
            return Ok(Core {
                lambda_min_projected,
                lambda_max_projected,
                lambda_min_interior: f64::NAN,
                lambda_max_interior: f64::NAN,
                n_test_vectors: 0,
                span_rank: 0,
                boundary_leakage: 1.0,
            });
        }
        // P = Φ(H) E_int assembled through the spectral subspace
        let mut w = DMatrix::<T>::zeros(k, m);
        for (row, &(idx, weight)) in selected.iter().enumerate() {
            for (col, &site) in sites.iter().enumerate() {
                w[(row, col)] =
                    se.eigenvectors[(site, idx)].conjugate() * T::from_real(weight);
            }
        }
        let p = &v_sel * w;
        let g_i = p.adjoint() * &p;
        let cp = c * &p;
        let g_c = p.adjoint() * cp;

        // regularized pencil: restrict to the numerically nonzero span
        let gi_eig = g_i.symmetric_eigen();
        let mu_max = gi_eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
        let kept: Vec<usize> = (0..m)
            .filter(|&i| gi_eig.eigenvalues[i] > 1e-10 * mu_max.max(1e-300))
            .collect();
        let rank = kept.len();
        if rank == 0 {
            if fraction < 0.89 {
                fraction = 0.9;
                continue;
            }
            return Ok(Core {
                lambda_min_projected,
                lambda_max_projected,
                lambda_min_interior: f64::NAN,
                lambda_max_interior: f64::NAN,
                n_test_vectors: m,
                span_rank: 0,
                boundary_leakage: 1.0,
            });
        }
        let mut basis = DMatrix::<T>::zeros(m, rank);
        for (col, &i) in kept.iter().enumerate() {
            let scale = T::from_real(1.0 / gi_eig.eigenvalues[i].sqrt());
            basis.set_column(col, &(gi_eig.eigenvectors.column(i) * scale));
        }
        let s = basis.adjoint() * &g_c * &basis;
        let s_eigs = s.symmetric_eigen().eigenvalues;
        let lambda_min_interior = s_eigs.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        let lambda_max_interior = s_eigs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));

        // worst boundary mass among normalized probe columns
        let mut leakage = 0.0f64;
        for col in 0..m {
            let pc = p.column(col);
            let total: f64 = pc.iter().map(|z| z.modulus().powi(2)).sum();
            if total <= 1e-300 {
                continue;
            }
            let mut tail = 0.0;
            match space {
                Space::HalfLine { n } => {
                    let cut = (0.9 * n as f64).floor() as usize;
                    for i in cut..n {
                        tail += pc[i].modulus().powi(2);
                    }
                }
                Space::LatticeBox { dim, radius } => {
                    let cut = (0.9 * radius as f64).floor() as i64;
                    for i in 0..pc.len() {
                        if (0..dim).any(|axis| space.coordinate(i, axis).abs() > cut) {
                            tail += pc[i].modulus().powi(2);
                        }
                    }
                }
            }
            leakage = leakage.max(tail / total);
        }

        return Ok(Core {
            lambda_min_projected,
            lambda_max_projected,
            lambda_min_interior,
            lambda_max_interior,
            n_test_vectors: m,
            span_rank: rank,
            boundary_leakage: leakage,
        });
    }
}
