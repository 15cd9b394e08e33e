//! Named experiment bundles with documented defaults. `preset(name)` yields a
//! fully-resolved manifest that `run` dispatches back here.

use std::path::Path;

use num_complex::Complex64;

use toeplitz_lab::operator::{
    commutator_i, compressed_ad_conjugate, conjugate_operator_halfline, hankel_matrix,
    toeplitz_matrix, OperatorMatrix, Space,
};
use toeplitz_lab::perturb::{admissibility_check, Condition, SequenceKind, SequenceSpec};
use toeplitz_lab::spectra::{mourre_verify, MourreOptions};
use toeplitz_lab::symbol::Symbol;
use toeplitz_lab::Interval;

use crate::manifest::{Experiment, Manifest, SpaceSpec, VectorSpec};
use crate::runner::{
    admissibility_summary, compute_thresholds, constants_for, mourre_test_operator, pieces_for,
    threshold_summary, write_admissibility_csv, write_mourre_csv, write_threshold_files,
};
use crate::{fmt_float, RunError};

pub const PRESET_NAMES: [&str; 6] = [
    "schro-SML",
    "rank1",
    "product",
    "lattice-laplacian-d1",
    "lattice-laplacian-d2",
    "free-toeplitz",
];

/// Fully-populated manifest for a named preset.
pub fn preset(name: &str) -> Result<Manifest, RunError> {
    let mut m = Manifest {
        experiment: Experiment::Preset,
        preset_name: Some(name.to_string()),
        ..Manifest::default()
    };
    match name {
        "free-toeplitz" => {
            m.symbol_text = "twocos".into();
            m.space = SpaceSpec::HalfLine { n: 512 };
        }
        "schro-SML" => {
            m.symbol_text = "twocos".into();
            m.space = SpaceSpec::HalfLine { n: 1024 };
            m.potential = Some(vec![
                (SequenceKind::Power { p: 2.0 }, "power:2".into()),
                (SequenceKind::AlternatingTail { p: 2.0 }, "alttail:2".into()),
                (SequenceKind::LogPower { p: 1.0 }, "logpow:1".into()),
            ]);
            m.lambda = (-1.0, 1.0);
            m.ladder = vec![256, 512, 1024];
        }
        "rank1" => {
            m.symbol_text = "twocos".into();
            m.space = SpaceSpec::HalfLine { n: 400 };
            m.rank_one = vec![(2.0, VectorSpec::Site(vec![1]), "e1".into())];
            m.lambda = (2.1, 3.0);
            m.ladder = vec![100, 200, 400];
        }
        "product" => {
            m.symbol_text = "twocos".into();
            m.space = SpaceSpec::HalfLine { n: 512 };
            m.ladder = vec![256, 512];
        }
        "lattice-laplacian-d1" => {
            m.symbol_text = "laplacian".into();
            m.space = SpaceSpec::Lattice { dim: 1, radius: 300 };
            m.lambda = (-1.0, 1.0);
            m.times = (0.0, 100.0, 4001);
            m.state = VectorSpec::Site(vec![0]);
        }
        "lattice-laplacian-d2" => {
            m.symbol_text = "laplacian".into();
            m.space = SpaceSpec::Lattice { dim: 2, radius: 12 };
            m.grid = 512;
        }
        other => {
            return Err(RunError::Manifest(format!(
                "unknown preset `{other}`; available: {}",
                PRESET_NAMES.join(", ")
            )));
        }
    }
    Ok(m)
}

pub(crate) fn run_preset(
    man: &Manifest,
    out: &Path,
    summary: &mut Vec<String>,
) -> Result<(), RunError> {
    let name = man.preset_name.as_deref().unwrap_or("");
    match name {
        "free-toeplitz" => free_toeplitz(man, out, summary),
        "schro-SML" => schro_sml(man, out, summary),
        "rank1" => rank1(man, out, summary),
        "product" => product(man, out, summary),
        "lattice-laplacian-d1" => lattice_laplacian(man, out, summary, 1),
        "lattice-laplacian-d2" => lattice_laplacian(man, out, summary, 2),
        other => Err(RunError::Manifest(format!(
            "unknown preset `{other}`; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

fn free_toeplitz(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let mut inner = man.clone();
    inner.experiment = Experiment::Spectrum;
    crate::runner::run_experiment_into(&inner, out, summary)
}

/// Admissibility checks for the three potential families plus the band
/// certificate for their sum.
fn schro_sml(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let horizon = (man.window.1 * man.r_max).ceil() as usize + 16;
    let families = [
        (SequenceKind::Power { p: 2.0 }, Condition::S),
        (SequenceKind::AlternatingTail { p: 2.0 }, Condition::M),
        (SequenceKind::LogPower { p: 1.0 }, Condition::L),
    ];
    let mut reports = Vec::new();
    for (kind, cond) in families {
        let spec = SequenceSpec::new(kind, horizon)?;
        let rep = admissibility_check(&spec, cond, man.window, man.r_max)?;
        summary.push(admissibility_summary(&rep));
        reports.push(rep);
    }
    write_admissibility_csv(out, &reports, "")?;

    let iv = Interval::new(man.lambda.0, man.lambda.1)?;
    let symbol = man.symbol();
    let constants = constants_for(&symbol, iv, man)?;
    let opts = MourreOptions { interior_fraction: man.interior_fraction, ..Default::default() };
    let mut rows = Vec::new();
    for &n in &man.ladder {
        let pieces = pieces_for(man, n)?;
        let h = pieces.to_matrix()?;
        let c_op = mourre_test_operator(&pieces, &symbol)?;
        rows.push((n, mourre_verify(&h, &c_op, iv, &constants, opts)?));
    }
    write_mourre_csv(out, &rows, "")?;
    let (n_top, top) = rows.last().expect("ladder nonempty");
    summary.push(format!(
        "mourre: {} (band-projected commutator lower bound under the summed potential: interior min {} vs c = {} - tol {}, n = {})",
        top.verdict,
        fmt_float(top.lambda_min_interior),
        fmt_float(top.constants.lower),
        fmt_float(top.tol),
        n_top,
    ));
    Ok(())
}

fn rank1(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let mut inner = man.clone();
    inner.experiment = Experiment::Count;
    crate::runner::run_experiment_into(&inner, out, summary)
}

/// Symmetrized product of two Toeplitz operators: assemble the Hamiltonian
/// both through the product symbol plus its cross-block correction and
/// through the plain symmetrized product, check they agree, then certify a
/// band away from the product thresholds.
fn product(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let f = Symbol::two_cos();
    let g = crate::manifest::parse_symbol("twocos+cos2", 1).map_err(RunError::Manifest)?;
    let h_sym = f.multiply(&g)?;
    let (criticals, thresholds) = compute_thresholds(&h_sym, man)?;
    write_threshold_files(out, &h_sym, &criticals, &thresholds, "product-")?;
    summary.push(threshold_summary(&thresholds));

    // band: the widest threshold-free gap inside the range, kept at half width
    let (lo, hi) = h_sym.range_on_grid(man.grid.min(4096));
    let mut cuts = vec![lo];
    cuts.extend(thresholds.iter().copied());
    cuts.push(hi);
    let (mut best_lo, mut best_hi) = (lo, hi);
    let mut best = 0.0;
    for w in cuts.windows(2) {
        if w[1] - w[0] > best {
            best = w[1] - w[0];
            best_lo = w[0];
            best_hi = w[1];
        }
    }
    let mid = 0.5 * (best_lo + best_hi);
    let half = 0.25 * (best_hi - best_lo);
    let iv = Interval::new(mid - half, mid + half)?;

    let weight = h_sym.grad_norm_squared()?;
    let constants = h_sym.mourre_constants(&weight, iv, man.grid, &man.enlargements)?;
    let opts = MourreOptions { interior_fraction: man.interior_fraction, ..Default::default() };
    let mut rows = Vec::new();
    let mut route_defect = 0.0f64;
    for &n in &man.ladder {
        let (h_op, defect) = product_hamiltonian(&f, &g, &h_sym, n)?;
        route_defect = route_defect.max(defect);
        let c_op = product_test_operator(&h_sym, &h_op, n)?;
        rows.push((n, mourre_verify(&h_op, &c_op, iv, &constants, opts)?));
    }
    write_mourre_csv(out, &rows, "product-")?;
    let (n_top, top) = rows.last().expect("ladder nonempty");
    summary.push(format!(
        "product assembly: interior route agreement {} (product-symbol + cross-block vs symmetrized product of truncations)",
        fmt_float(route_defect),
    ));
    summary.push(format!(
        "mourre: {} on {} (band-projected commutator lower bound for the symmetrized product: interior min {} vs c = {} - tol {}, n = {})",
        top.verdict,
        iv,
        fmt_float(top.lambda_min_interior),
        fmt_float(top.constants.lower),
        fmt_float(top.tol),
        n_top,
    ));
    Ok(())
}

/// H = T_{fg} - (H_f H_{conj(g)}^* + H_g H_{conj(f)}^*)/2: the exact
/// compression of the symmetrized product (the cross-block correction is
/// corner-supported for band-limited symbols). The plain symmetrized product
/// of truncations (T_f T_g + T_g T_f)/2 must agree away from the far edge;
/// the interior defect of that comparison is returned alongside.
fn product_hamiltonian(
    f: &Symbol,
    g: &Symbol,
    h_sym: &Symbol,
    n: usize,
) -> Result<(OperatorMatrix, f64), RunError> {
    let tf = toeplitz_matrix(f, n)?;
    let tg = toeplitz_matrix(g, n)?;
    let direct = (&tf.data * &tg.data + &tg.data * &tf.data)
        .map(|z| z * Complex64::new(0.5, 0.0));
    let th = toeplitz_matrix(h_sym, n)?;
    let hf = hankel_matrix(f, n)?;
    let hg = hankel_matrix(g, n)?;
    let hg_bar = hankel_matrix(&g.conj(), n)?;
    let hf_bar = hankel_matrix(&f.conj(), n)?;
    let cross = (&hf.data * hg_bar.data.adjoint() + &hg.data * hf_bar.data.adjoint())
        .map(|z| z * Complex64::new(0.5, 0.0));
    let decomposed = &th.data - cross;
    let trim = (f.max_bandwidth() + g.max_bandwidth()) as usize;
    let defect = toeplitz_lab::operator::DefectReport::from_matrix(
        "product routes",
        &(&direct - &decomposed),
        trim.min(n),
    );
    Ok((
        OperatorMatrix::from_data(Space::HalfLine { n }, decomposed, "Re(T_f T_g)"),
        defect.interior_max,
    ))
}

/// Test operator for the product Hamiltonian: compressed commutator for the
/// product symbol plus the bracket with the compact Hankel correction
/// K = H - T_h (exactly supported in the coefficient corner).
fn product_test_operator(
    h_sym: &Symbol,
    h_op: &OperatorMatrix,
    n: usize,
) -> Result<OperatorMatrix, RunError> {
    let base = compressed_ad_conjugate(h_sym, &h_sym.derivative(0)?, n)?;
    let th = toeplitz_matrix(h_sym, n)?;
    let k = OperatorMatrix::from_data(Space::HalfLine { n }, &h_op.data - &th.data, "K");
    let a = conjugate_operator_halfline(&h_sym.derivative(0)?, n)?;
    Ok(base.add(&commutator_i(&a, &k)?)?)
}

fn lattice_laplacian(
    man: &Manifest,
    out: &Path,
    summary: &mut Vec<String>,
    dim: usize,
) -> Result<(), RunError> {
    let symbol = Symbol::laplacian(dim)?;
    let (criticals, thresholds) = compute_thresholds(&symbol, man)?;
    write_threshold_files(out, &symbol, &criticals, &thresholds, "")?;
    summary.push(threshold_summary(&thresholds));
    if dim == 1 {
        // ballistic transport from the origin with the mid-band filter
        let mut inner = man.clone();
        inner.experiment = Experiment::BandRate;
        crate::runner::run_experiment_into(&inner, out, summary)?;
    }
    Ok(())
}
