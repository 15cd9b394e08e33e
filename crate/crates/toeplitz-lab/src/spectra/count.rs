//! Eigenvalue counting on a truncation ladder. At finite truncation the
//! discretized continuous spectrum fills the band, so "eigenvalue of H" means
//! an eigenvalue of H^(N) whose eigenvector stays away from the truncation
//! edge; genuine bound states pass the filter, standing waves do not.

use super::{boundary_leakage, eigh};
use crate::error::Result;
use crate::interval::Interval;
use crate::operator::OperatorMatrix;
use crate::par;

#[derive(Debug, Clone)]
pub struct EigenvalueCountReport {
    pub interval: Interval,
    /// (truncation, filtered count) per ladder rung, in ladder order.
    pub counts: Vec<(usize, usize)>,
    /// Set only when the last three rungs agree exactly.
    pub stabilized_count: Option<usize>,
    /// Filtered eigenvalues at the largest truncation.
    pub eigenvalues_at_top: Vec<f64>,
    /// (eigenvalue, multiplicity) groups at the largest truncation.
    pub multiplicities: Vec<(f64, usize)>,
    /// min over thresholds of dist(Λ, t).
    pub distance_to_thresholds: f64,
    /// Λ̄ touches the threshold set.
    pub threshold_warning: bool,
    pub leakage_filter: f64,
}

/// Count leakage-filtered eigenvalues of the family H(N) inside Λ along the
/// ladder. Rungs run in parallel; aggregation stays in ladder order.
pub fn count_eigenvalues<B>(
    build: B,
    interval: Interval,
    ladder: &[usize],
    thresholds: &[f64],
    leakage_filter: f64,
) -> Result<EigenvalueCountReport>
where
    B: Fn(usize) -> Result<OperatorMatrix> + Sync + Send,
{
    let per_rung: Vec<Result<(usize, Vec<f64>)>> = par::map_indexed(ladder.len(), |i| {
        let n = ladder[i];
        let h = build(n)?;
        let sd = eigh(&h)?;
        let mut found = Vec::new();
        for k in 0..sd.dim() {
            let lambda = sd.eigenvalues[k];
            if !interval.contains(lambda) {
                continue;
            }
            let v = sd.eigenvector(k);
            if boundary_leakage(sd.space, &v) < leakage_filter {
                found.push(lambda);
            }
        }
        Ok((n, found))
    });
    let mut counts = Vec::with_capacity(ladder.len());
    let mut top: Vec<f64> = Vec::new();
    for r in per_rung {
        let (n, found) = r?;
        counts.push((n, found.len()));
        top = found;
    }
    let stabilized_count = if counts.len() >= 3 {
        let tail = &counts[counts.len() - 3..];
        (tail[0].1 == tail[1].1 && tail[1].1 == tail[2].1).then_some(tail[2].1)
    } else {
        None
    };
    let multiplicities = group_multiplicities(&top, 1e-6);
    let distance_to_thresholds = thresholds
        .iter()
        .map(|&t| interval.dist(t))
        .fold(f64::INFINITY, f64::min);
    Ok(EigenvalueCountReport {
        interval,
        counts,
        stabilized_count,
        eigenvalues_at_top: top,
        multiplicities,
        distance_to_thresholds,
        threshold_warning: distance_to_thresholds <= 0.0,
        leakage_filter,
    })
}

fn group_multiplicities(sorted: &[f64], tol: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &l in sorted {
        match out.last_mut() {
            Some((rep, count)) if (l - *rep).abs() <= tol => {
                *count += 1;
            }
            _ => out.push((l, 1)),
        }
    }
    out
}
