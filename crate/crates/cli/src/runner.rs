//! Experiment execution: one manifest in, deterministic artifact files out.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use num_complex::Complex64;

use toeplitz_lab::dynamo::{band_filtered_rate, propagation_trace, HPieces};
use toeplitz_lab::operator::{
    commutator_i, compressed_ad_conjugate, conjugate_operator_for, laurent_matrix, Boundary,
    OperatorMatrix, Space,
};
use toeplitz_lab::perturb::{
    admissibility_check, gsah_probe, AdmissibilityReport, SequenceKind, SequenceSpec,
};
use toeplitz_lab::spectra::{
    count_eigenvalues, eigh, lap_probe, mourre_verify, MourreOptions, MourreReport,
};
use toeplitz_lab::symbol::{MourreConstants, Symbol};
use toeplitz_lab::{Interval, Result as LabResult};

use crate::manifest::{Experiment, Manifest, ProbeSpec, SpaceSpec, VectorSpec};
use crate::{fmt_float, RunError};

/// Outcome of a run: the artifact directory and the summary lines written.
#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub summary: Vec<String>,
}

pub fn run(man: &Manifest, out_override: Option<&Path>) -> Result<RunOutcome, RunError> {
    let out_dir = out_override.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(&man.out));
    fs::create_dir_all(&out_dir)
        .map_err(|e| RunError::Internal(format!("cannot create output dir: {e}")))?;
    let mut resolved = man.clone();
    resolved.out = out_dir.display().to_string();
    write_text(&out_dir, "manifest.resolved", &resolved.resolved_text())?;

    let mut summary = Vec::new();
    run_experiment_into(man, &out_dir, &mut summary)?;
    let text = summary.join("\n") + "\n";
    write_text(&out_dir, "summary.txt", &text)?;
    Ok(RunOutcome { out_dir, summary })
}

/// Dispatch a single experiment, appending its verdict lines; preset bundles
/// reuse this for their steps.
pub(crate) fn run_experiment_into(
    man: &Manifest,
    out_dir: &Path,
    summary: &mut Vec<String>,
) -> Result<(), RunError> {
    match man.experiment {
        Experiment::Spectrum => run_spectrum(man, out_dir, summary),
        Experiment::Thresholds => run_thresholds(man, out_dir, summary),
        Experiment::Mourre => run_mourre(man, out_dir, summary),
        Experiment::Count => run_count(man, out_dir, summary),
        Experiment::Lap => run_lap(man, out_dir, summary),
        Experiment::Evolve => run_evolve(man, out_dir, summary),
        Experiment::BandRate => run_band_rate(man, out_dir, summary),
        Experiment::Probe => run_probe(man, out_dir, summary),
        Experiment::Preset => crate::presets::run_preset(man, out_dir, summary),
    }
}

pub(crate) fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), RunError> {
    fs::write(dir.join(name), text)
        .map_err(|e| RunError::Internal(format!("cannot write {name}: {e}")))
}

/// Resize a space spec along the truncation ladder.
fn space_with_size(spec: SpaceSpec, size: usize) -> Space {
    match spec {
        SpaceSpec::HalfLine { .. } => Space::HalfLine { n: size },
        SpaceSpec::Lattice { dim, .. } => Space::LatticeBox { dim, radius: size },
    }
}

/// Summed diagonal potential over the manifest terms.
pub(crate) fn potential_values(man: &Manifest, horizon: usize) -> Result<Option<Vec<f64>>, RunError> {
    let Some(terms) = &man.potential else {
        return Ok(None);
    };
    let mut total = vec![0.0; horizon];
    for (kind, _) in terms {
        let spec = SequenceSpec::new(kind.clone(), horizon)?;
        for (acc, v) in total.iter_mut().zip(spec.materialize()) {
            *acc += v;
        }
    }
    Ok(Some(total))
}

pub(crate) fn build_vector(
    spec: &VectorSpec,
    space: Space,
) -> Result<DVector<Complex64>, RunError> {
    let m = space.matrix_dim();
    match spec {
        VectorSpec::Site(site) => {
            let idx = match space {
                Space::HalfLine { n } => {
                    let k = site[0];
                    if site.len() != 1 || k < 1 || k > n as i64 {
                        return Err(RunError::Manifest(format!(
                            "site {site:?} outside the half-line 1..={n}"
                        )));
                    }
                    (k - 1) as usize
                }
                Space::LatticeBox { dim, .. } => {
                    if site.len() != dim {
                        return Err(RunError::Manifest(format!(
                            "site {site:?} has wrong arity for dimension {dim}"
                        )));
                    }
                    space.flat(site).ok_or_else(|| {
                        RunError::Manifest(format!("site {site:?} outside the box"))
                    })?
                }
            };
            Ok(DVector::from_fn(m, |i, _| {
                Complex64::new(if i == idx { 1.0 } else { 0.0 }, 0.0)
            }))
        }
        VectorSpec::Decay(p) => {
            if !matches!(space, Space::HalfLine { .. }) {
                return Err(RunError::Manifest("decay vectors live on the half-line".into()));
            }
            let mut v =
                DVector::from_fn(m, |i, _| Complex64::new(((i + 1) as f64).powf(-p), 0.0));
            let norm = v.norm();
            v /= Complex64::new(norm, 0.0);
            Ok(v)
        }
    }
}

/// Structured Hamiltonian for a given size along the ladder.
pub(crate) fn pieces_for(man: &Manifest, size: usize) -> Result<HPieces, RunError> {
    let space = space_with_size(man.space, size);
    let symbol = man.symbol();
    let mut pieces = HPieces::free(symbol, space);
    if man.potential.is_some() {
        if !matches!(space, Space::HalfLine { .. }) {
            return Err(RunError::Manifest(
                "diagonal potentials are half-line sequences; lattice runs take rank1 terms only"
                    .into(),
            ));
        }
        if let Some(values) = potential_values(man, space.matrix_dim())? {
            pieces = pieces.with_diagonal(values);
        }
    }
    for (beta, vspec, _) in &man.rank_one {
        let psi = build_vector(vspec, space)?;
        pieces = pieces.with_rank_one(*beta, psi);
    }
    Ok(pieces)
}

fn default_size(man: &Manifest) -> usize {
    match man.space {
        SpaceSpec::HalfLine { n } => n,
        SpaceSpec::Lattice { radius, .. } => radius,
    }
}

fn interval(man: &Manifest) -> Result<Interval, RunError> {
    Interval::new(man.lambda.0, man.lambda.1).map_err(RunError::from)
}

/// Critical-set seed grid: fine in one dimension, coarse seeds elsewhere
/// (refinement converges from any nearby cell).
fn critical_grid(dim: usize, grid: usize) -> usize {
    if dim == 1 {
        grid
    } else {
        48
    }
}

pub(crate) fn constants_for(
    symbol: &Symbol,
    iv: Interval,
    man: &Manifest,
) -> LabResult<MourreConstants> {
    let weight = symbol.grad_norm_squared()?;
    let grid = if symbol.dim() == 1 { man.grid } else { man.grid.min(512) };
    symbol.mourre_constants(&weight, iv, grid, &man.enlargements)
}

// ---------------------------------------------------------------- spectrum

fn run_spectrum(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let pieces = pieces_for(man, default_size(man))?;
    let h = pieces.to_matrix()?;
    let sd = eigh(&h)?;
    let mut csv = String::from("k,lambda\n");
    for (k, l) in sd.eigenvalues.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", k + 1, fmt_float(*l)));
    }
    write_text(out, "spectrum.csv", &csv)?;
    let (lo, hi) = man.symbol().range_on_grid(man.grid.min(4096));
    let inside = sd.eigenvalues.first().map(|&l| l >= lo - 1e-9).unwrap_or(true)
        && sd.eigenvalues.last().map(|&l| l <= hi + 1e-9).unwrap_or(true);
    summary.push(format!(
        "spectrum: {} eigenvalues in [{}, {}]; inside symbol range [{}, {}]: {} (truncated spectrum against the symbol range)",
        sd.eigenvalues.len(),
        fmt_float(sd.eigenvalues[0]),
        fmt_float(*sd.eigenvalues.last().unwrap()),
        fmt_float(lo),
        fmt_float(hi),
        inside
    ));
    Ok(())
}

// -------------------------------------------------------------- thresholds

fn run_thresholds(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let symbol = man.symbol();
    let (criticals, thresholds) = compute_thresholds(&symbol, man)?;
    write_threshold_files(out, &symbol, &criticals, &thresholds, "")?;
    summary.push(threshold_summary(&thresholds));
    Ok(())
}

pub(crate) fn compute_thresholds(
    symbol: &Symbol,
    man: &Manifest,
) -> Result<(toeplitz_lab::symbol::CriticalSet, Vec<f64>), RunError> {
    let grid = critical_grid(symbol.dim(), man.grid);
    let criticals = symbol.critical_set(grid, 1e-10)?;
    let thresholds = symbol.thresholds(&criticals);
    Ok((criticals, thresholds))
}

pub(crate) fn write_threshold_files(
    out: &Path,
    symbol: &Symbol,
    criticals: &toeplitz_lab::symbol::CriticalSet,
    thresholds: &[f64],
    prefix: &str,
) -> Result<(), RunError> {
    let dim = symbol.dim();
    let mut csv = String::from("value\n");
    for t in thresholds {
        csv.push_str(&format!("{}\n", fmt_float(*t)));
    }
    write_text(out, &format!("{prefix}thresholds.csv"), &csv)?;
    let mut csv = String::new();
    for j in 0..dim {
        csv.push_str(&format!("theta_{},", j + 1));
    }
    csv.push_str("value,degenerate\n");
    for (p, deg) in criticals.points.iter().zip(&criticals.degenerate) {
        for c in p {
            csv.push_str(&format!("{},", fmt_float(*c)));
        }
        csv.push_str(&format!("{},{}\n", fmt_float(symbol.eval_real(p)), deg));
    }
    write_text(out, &format!("{prefix}criticals.csv"), &csv)?;
    Ok(())
}

pub(crate) fn threshold_summary(thresholds: &[f64]) -> String {
    let vals: Vec<String> = thresholds.iter().map(|t| format!("{t:.9}")).collect();
    format!("thresholds: {{{}}} (critical values of the symbol)", vals.join(", "))
}

// ------------------------------------------------------------------ mourre

/// Test operator for the commutator positivity check: the compression of the
/// full-operator commutator plus the perturbation bracket.
pub(crate) fn mourre_test_operator(
    pieces: &HPieces,
    symbol: &Symbol,
) -> Result<OperatorMatrix, RunError> {
    let space = pieces.space;
    let mut c_op = match space {
        Space::HalfLine { n } => {
            compressed_ad_conjugate(symbol, &symbol.derivative(0)?, n)?
        }
        Space::LatticeBox { radius, .. } => {
            // i ad over the lattice closes to the gradient-square convolution
            laurent_matrix(&symbol.grad_norm_squared()?, radius, Boundary::Truncate)?
        }
    };
    let needs_bracket = pieces.diagonal.is_some() || !pieces.rank.is_empty();
    if needs_bracket {
        let a = conjugate_operator_for(symbol, space)?;
        let mut v = pieces.clone();
        v.symbol = Symbol::zero(symbol.dim());
        let v_matrix = v.to_matrix()?;
        c_op = c_op.add(&commutator_i(&a, &v_matrix)?)?;
    }
    Ok(c_op)
}

fn run_mourre(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let iv = interval(man)?;
    let symbol = man.symbol();
    let constants = constants_for(&symbol, iv, man)?;
    let opts = MourreOptions { interior_fraction: man.interior_fraction, ..Default::default() };
    let mut rows = Vec::new();
    for &n in &man.ladder {
        let pieces = pieces_for(man, n)?;
        let h = pieces.to_matrix()?;
        let c_op = mourre_test_operator(&pieces, &symbol)?;
        let rep = mourre_verify(&h, &c_op, iv, &constants, opts)?;
        rows.push((n, rep));
    }
    write_mourre_csv(out, &rows, "")?;
    let (n_top, top) = rows.last().expect("ladder is nonempty");
    summary.push(format!(
        "mourre: {} (band-projected commutator lower bound: interior min {} vs c = {} - tol {}, n = {})",
        top.verdict,
        fmt_float(top.lambda_min_interior),
        fmt_float(top.constants.lower),
        fmt_float(top.tol),
        n_top
    ));
    Ok(())
}

pub(crate) fn write_mourre_csv(
    out: &Path,
    rows: &[(usize, MourreReport)],
    prefix: &str,
) -> Result<(), RunError> {
    let mut csv =
        String::from("n,lambda_lo,lambda_hi,c,c_sharp,lam_min_interior,leakage,verdict\n");
    for (n, rep) in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            n,
            fmt_float(rep.interval.lo),
            fmt_float(rep.interval.hi),
            fmt_float(rep.constants.lower),
            fmt_float(rep.constants.lower_sharp),
            fmt_float(rep.lambda_min_interior),
            fmt_float(rep.boundary_leakage),
            rep.verdict
        ));
    }
    write_text(out, &format!("{prefix}mourre.csv"), &csv)
}

// ------------------------------------------------------------------- count

fn run_count(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let iv = interval(man)?;
    let symbol = man.symbol();
    let (_, thresholds) = compute_thresholds(&symbol, man)?;
    let rep = count_eigenvalues(
        |n| pieces_for(man, n).map_err(|e| err_to_lab(&e))?.to_matrix(),
        iv,
        &man.ladder,
        &thresholds,
        0.01,
    )?;
    let mut csv = String::from("n,count\n");
    for (n, c) in &rep.counts {
        csv.push_str(&format!("{n},{c}\n"));
    }
    write_text(out, "count.csv", &csv)?;
    let mut csv = String::from("lambda,multiplicity\n");
    for (l, m) in &rep.multiplicities {
        csv.push_str(&format!("{},{}\n", fmt_float(*l), m));
    }
    write_text(out, "eigenvalues.csv", &csv)?;
    match rep.stabilized_count {
        Some(k) => {
            let at: Vec<String> =
                rep.eigenvalues_at_top.iter().map(|l| format!("{l:.9}")).collect();
            summary.push(format!(
                "count: stabilized {k} localized eigenvalue(s) in {} at [{}] (boundary-leakage filtered ladder){}",
                rep.interval,
                at.join(", "),
                if rep.threshold_warning { "; WARNING: interval touches the threshold set" } else { "" }
            ));
        }
        None => summary.push(format!(
            "count: unstable across the ladder {:?} (boundary-leakage filtered ladder)",
            rep.counts
        )),
    }
    Ok(())
}

fn err_to_lab(e: &RunError) -> toeplitz_lab::Error {
    toeplitz_lab::Error::MatrixFormat(e.to_string())
}

// --------------------------------------------------------------------- lap

fn run_lap(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let pieces = pieces_for(man, default_size(man))?;
    let h = pieces.to_matrix()?;
    let a = conjugate_operator_for(&man.symbol(), h.space)?;
    let (e0, e1, count) = man.etas;
    let etas: Vec<f64> = (0..count)
        .map(|k| 10f64.powf(e0 + (e1 - e0) * k as f64 / (count - 1) as f64))
        .collect();
    let profile = lap_probe(&h, &a, man.energy, &etas)?;
    let mut csv = String::from("eta,norm\n");
    for (eta, norm) in &profile.points {
        csv.push_str(&format!("{},{}\n", fmt_float(*eta), fmt_float(*norm)));
    }
    write_text(out, "lap.csv", &csv)?;
    let (class, slope) = classify_lap(&profile.points, profile.resolution_floor);
    summary.push(format!(
        "lap: {class} at energy {} (weighted resolvent profile, log-log slope {} above floor {})",
        fmt_float(man.energy),
        fmt_float(slope),
        fmt_float(profile.resolution_floor),
    ));
    Ok(())
}

/// Plateau vs divergence from the profile above the finite-size floor.
pub(crate) fn classify_lap(points: &[(f64, f64)], floor: f64) -> (&'static str, f64) {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(e, n)| *e >= floor && *n > 0.0)
        .map(|&(e, n)| (e.ln(), n.ln()))
        .collect();
    if usable.len() < 4 {
        return ("unresolved", f64::NAN);
    }
    let nf = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / nf;
    let slope = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / usable.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    // variation per decade below 10% reads as a plateau
    if slope.abs() < 0.1f64.ln_1p() / std::f64::consts::LN_10 {
        ("plateau", slope)
    } else if slope < -0.5 {
        ("divergent", slope)
    } else {
        ("drifting", slope)
    }
}

// ------------------------------------------------------------------ evolve

fn times_of(man: &Manifest) -> Vec<f64> {
    let (t0, t1, count) = man.times;
    (0..count).map(|k| t0 + (t1 - t0) * k as f64 / (count - 1) as f64).collect()
}

fn write_trace_csv(
    out: &Path,
    name: &str,
    trace: &toeplitz_lab::dynamo::PropagationTrace,
) -> Result<(), RunError> {
    let mut csv = String::from("t,x_norm,cesaro,rate_running\n");
    for k in 0..trace.times.len() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(trace.times[k]),
            fmt_float(trace.x_norms[k]),
            fmt_float(trace.cesaro[k]),
            fmt_float(trace.rate_running[k]),
        ));
    }
    write_text(out, name, &csv)
}

fn run_evolve(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let pieces = pieces_for(man, default_size(man))?;
    let space = pieces.space;
    let phi = build_vector(&man.state, space)?;
    let times = times_of(man);
    let trace = propagation_trace(&pieces, &phi, &times, man.fit_window)?;
    write_trace_csv(out, "trace.csv", &trace)?;
    summary.push(format!(
        "evolve: rate {} +- {} (position-norm growth over the fit window); identity residual {}; unitarity defect {}",
        fmt_float(trace.rate_fit.slope),
        fmt_float(trace.rate_fit.stderr),
        fmt_float(trace.identity_residual),
        fmt_float(trace.unitarity_defect),
    ));
    Ok(())
}

// --------------------------------------------------------------- band-rate

fn run_band_rate(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let iv = interval(man)?;
    let symbol = man.symbol();
    let constants = constants_for(&symbol, iv, man)?;
    let pieces = pieces_for(man, default_size(man))?;
    let phi = build_vector(&man.state, pieces.space)?;
    let times = times_of(man);
    let report = band_filtered_rate(&pieces, iv, &phi, &times, man.fit_window, &constants)?;
    write_trace_csv(out, "bandrate.csv", &report.trace)?;
    let tol = 0.1 * report.bounds.1;
    let ok = report.rate >= report.bounds.0 - tol && report.rate <= report.bounds.1 + tol;
    summary.push(format!(
        "band-rate: rate {} in [sqrt(c) - tol, sqrt(C) + tol] = [{}, {}]: {} (band-filtered transport sandwich); excluded {} bound state(s)",
        fmt_float(report.rate),
        fmt_float(report.bounds.0 - tol),
        fmt_float(report.bounds.1 + tol),
        if ok { "certified" } else { "violated" },
        report.excluded.len(),
    ));
    Ok(())
}

// ------------------------------------------------------------------- probe

fn run_probe(man: &Manifest, out: &Path, summary: &mut Vec<String>) -> Result<(), RunError> {
    let Some(probe) = &man.probe else {
        return Err(RunError::Manifest("experiment `probe` needs a `probe = ...` key".into()));
    };
    let report = match probe {
        ProbeSpec::Condition(cond) => {
            let horizon = (man.window.1 * man.r_max).ceil() as usize + 16;
            let spec = summed_sequence(man, horizon)?;
            admissibility_check(&spec, *cond, man.window, man.r_max)?
        }
        ProbeSpec::Gsah { s } => {
            let size = default_size(man);
            let mut v = pieces_for(man, size)?;
            v.symbol = Symbol::zero(man.space_dim());
            let v_matrix = v.to_matrix()?;
            gsah_probe(&v_matrix, *s, man.window, man.r_max)?
        }
    };
    write_admissibility_csv(out, std::slice::from_ref(&report), "")?;
    summary.push(admissibility_summary(&report));
    Ok(())
}

pub(crate) fn summed_sequence(man: &Manifest, horizon: usize) -> Result<SequenceSpec, RunError> {
    let Some(terms) = &man.potential else {
        return Err(RunError::Manifest("probe needs a `potential = ...` key".into()));
    };
    if terms.len() == 1 {
        return Ok(SequenceSpec::new(terms[0].0.clone(), horizon)?);
    }
    let mut total = vec![0.0; horizon];
    for (kind, _) in terms {
        let spec = SequenceSpec::new(kind.clone(), horizon)?;
        for (acc, v) in total.iter_mut().zip(spec.materialize()) {
            *acc += v;
        }
    }
    Ok(SequenceSpec::new(SequenceKind::Explicit(total), horizon)?)
}

pub(crate) fn write_admissibility_csv(
    out: &Path,
    reports: &[AdmissibilityReport],
    prefix: &str,
) -> Result<(), RunError> {
    let mut csv = String::from(
        "condition,window_a,window_b,r_max,integral_estimate,tail_exponent,fit_r2,verdict\n",
    );
    for r in reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.condition,
            fmt_float(r.window.0),
            fmt_float(r.window.1),
            fmt_float(r.r_max),
            fmt_float(r.integral_estimate),
            fmt_float(r.tail_exponent),
            fmt_float(r.fit_r2),
            r.verdict
        ));
    }
    write_text(out, &format!("{prefix}admissibility.csv"), &csv)
}

pub(crate) fn admissibility_summary(r: &AdmissibilityReport) -> String {
    format!(
        "probe {}: {} (windowed tail exponent {}, R^2 {}){}",
        r.condition,
        r.verdict,
        fmt_float(r.tail_exponent),
        fmt_float(r.fit_r2),
        if r.flags.is_empty() { String::new() } else { format!("; flags: {}", r.flags.join("; ")) }
    )
}
