use super::*;
use crate::linalg;

fn spec(kind: SequenceKind, horizon: usize) -> SequenceSpec {
    SequenceSpec::new(kind, horizon).unwrap()
}

#[test]
fn diagonal_potential_power2() {
    let v = diagonal_potential(&spec(SequenceKind::Power { p: 2.0 }, 8), 4).unwrap();
    let expect = [1.0, 0.25, 1.0 / 9.0, 1.0 / 16.0];
    for (i, e) in expect.iter().enumerate() {
        assert!((v.data[(i, i)].re - e).abs() < 1e-15);
    }
    assert!(v.hermitian);
}

#[test]
fn diagonal_potential_boundary_spike() {
    let v =
        diagonal_potential(&spec(SequenceKind::Explicit(vec![2.0]), 6), 6).unwrap();
    assert_eq!(v.data[(0, 0)].re, 2.0);
    for i in 1..6 {
        assert_eq!(v.data[(i, i)].re, 0.0);
    }
}

#[test]
fn diagonal_potential_oscillatory() {
    let v = diagonal_potential(&spec(SequenceKind::Oscillatory { p: 1.0 }, 4), 4).unwrap();
    let expect = [-1.0, 0.5, -1.0 / 3.0, 0.25];
    for (i, e) in expect.iter().enumerate() {
        assert!((v.data[(i, i)].re - e).abs() < 1e-15);
    }
}

#[test]
fn diagonal_potential_needs_horizon() {
    assert!(matches!(
        diagonal_potential(&spec(SequenceKind::Power { p: 1.0 }, 4), 8),
        Err(crate::error::Error::HorizonTooShort { .. })
    ));
}

#[test]
fn seminorm_harmonic_telescopes() {
    // γ = 1/n: q0 = 1 and sup n(1/n - 1/(n+1)) = 1/2 at n = 1
    let s = spec(SequenceKind::Power { p: 1.0 }, 100_000);
    assert!((seminorm_q(&s, 0, 99_000).unwrap() - 1.0).abs() < 1e-12);
    assert!((seminorm_q(&s, 1, 99_000).unwrap() - 1.5).abs() < 1e-9);
}

#[test]
fn seminorm_constant_sequence() {
    let s = spec(SequenceKind::Explicit(vec![0.7; 512]), 512);
    for k in 0..=3 {
        assert!((seminorm_q(&s, k, 400).unwrap() - 0.7).abs() < 1e-15);
    }
}

#[test]
fn seminorm_log_power_stabilizes() {
    let s_small = spec(SequenceKind::LogPower { p: 1.0 }, 10_000);
    let s_big = spec(SequenceKind::LogPower { p: 1.0 }, 100_000);
    let q_small = seminorm_q(&s_small, 2, 9_990).unwrap();
    let q_big = seminorm_q(&s_big, 2, 99_990).unwrap();
    assert!(
        (q_big - q_small).abs() / q_big < 1e-3,
        "q2 moved from {q_small} to {q_big}"
    );
}

#[test]
fn seminorm_monotone_in_order() {
    for kind in [
        SequenceKind::Power { p: 1.5 },
        SequenceKind::LogPower { p: 1.0 },
        SequenceKind::Oscillatory { p: 2.0 },
        SequenceKind::AlternatingTail { p: 2.0 },
    ] {
        let s = spec(kind, 4096);
        let qs: Vec<f64> = (0..=3).map(|k| seminorm_q(&s, k, 4000).unwrap()).collect();
        for w in qs.windows(2) {
            assert!(w[0] <= w[1] + 1e-15);
        }
    }
}

#[test]
fn seminorm_rejects_high_order() {
    let s = spec(SequenceKind::Power { p: 1.0 }, 64);
    assert!(matches!(seminorm_q(&s, 4, 10), Err(crate::error::Error::SeminormOrder(4))));
}

#[test]
fn alternating_tail_differences_and_decay() {
    let s = spec(SequenceKind::AlternatingTail { p: 2.0 }, 2048);
    let v = s.materialize();
    // difference sequence is exactly ±1/n^2
    for n in 1..100usize {
        let expect = (n as f64).powi(-2) * if n % 2 == 0 { 1.0 } else { -1.0 };
        assert!(((v[n - 1] - v[n]) - expect).abs() < 1e-12);
    }
    // tail bound |t_n| <= 1/n^2
    for n in [10usize, 100, 1000] {
        assert!(v[n - 1].abs() <= (n as f64).powi(-2));
    }
}

#[test]
fn condition_s_power2_converges() {
    let s = spec(SequenceKind::Power { p: 2.0 }, 40_000);
    let rep = admissibility_check(&s, Condition::S, (1.0, 2.0), 1e4).unwrap();
    assert_eq!(rep.verdict, Verdict::Converges);
    assert!(rep.fit_r2 >= 0.99);
    assert!((rep.tail_exponent + 2.0).abs() < 0.05, "exponent {}", rep.tail_exponent);
}

#[test]
fn condition_s_harmonic_diverges() {
    let s = spec(SequenceKind::Power { p: 1.0 }, 40_000);
    let rep = admissibility_check(&s, Condition::S, (1.0, 2.0), 1e4).unwrap();
    assert_eq!(rep.verdict, Verdict::Diverges);
    assert!(rep.fit_r2 >= 0.99);
}

#[test]
fn condition_h_square_summable_profiles() {
    let fast = spec(SequenceKind::Power { p: 2.0 }, 40_000);
    let rep = admissibility_check(&fast, Condition::H, (1.0, 2.0), 1e4).unwrap();
    assert_eq!(rep.verdict, Verdict::Converges);
    assert!((rep.tail_exponent + 1.5).abs() < 0.05);

    let slow = spec(SequenceKind::Power { p: 1.0 }, 40_000);
    let rep = admissibility_check(&slow, Condition::H, (1.0, 2.0), 1e4).unwrap();
    assert_eq!(rep.verdict, Verdict::Diverges);
    assert!((rep.tail_exponent + 0.5).abs() < 0.05);
}

#[test]
fn condition_m_alternating_tail_passes() {
    let s = spec(SequenceKind::AlternatingTail { p: 2.0 }, 40_000);
    let rep = admissibility_check(&s, Condition::M, (1.0, 2.0), 1e4).unwrap();
    assert_eq!(rep.verdict, Verdict::Converges, "flags: {:?}", rep.flags);
    assert!(rep.limit_ok.unwrap());
    assert!(rep.seminorm.as_ref().unwrap().stabilized);
}

#[test]
fn condition_m_fails_without_vanishing_limit() {
    // partial sums converge to a nonzero constant
    let vals: Vec<f64> = (1..=4096).map(|n| 1.0 + 1.0 / n as f64).collect();
    let s = spec(SequenceKind::Explicit(vals), 4096);
    let rep = admissibility_check(&s, Condition::M, (1.0, 2.0), 1e3).unwrap();
    assert_eq!(rep.verdict, Verdict::Diverges);
    assert_eq!(rep.limit_ok, Some(false));
}

#[test]
fn condition_l_log_power_passes_proxy() {
    let s = spec(SequenceKind::LogPower { p: 1.0 }, 100_000);
    let rep = admissibility_check(&s, Condition::L, (1.0, 2.0), 1e4).unwrap();
    assert_eq!(rep.verdict, Verdict::Converges, "flags: {:?}", rep.flags);
    assert_eq!(rep.basis, VerdictBasis::SeminormProxy);
    let sem = rep.seminorm.unwrap();
    assert_eq!(sem.order, 2);
    assert!(sem.stabilized);
    assert!(rep.limit_ok.unwrap());
}

#[test]
fn verdict_stable_under_doubling_r_max() {
    for (kind, cond) in [
        (SequenceKind::Power { p: 2.0 }, Condition::S),
        (SequenceKind::Power { p: 1.0 }, Condition::S),
        (SequenceKind::Power { p: 2.0 }, Condition::H),
        (SequenceKind::Power { p: 1.0 }, Condition::H),
        (SequenceKind::AlternatingTail { p: 2.0 }, Condition::M),
    ] {
        let s = spec(kind, 80_000);
        let r1 = admissibility_check(&s, cond, (1.0, 2.0), 1e4).unwrap();
        let r2 = admissibility_check(&s, cond, (1.0, 2.0), 2e4).unwrap();
        assert_eq!(r1.verdict, r2.verdict, "condition {cond} flipped");
    }
}

#[test]
fn finite_rank_projectors() {
    let n = 16;
    let e1 = nalgebra::DVector::from_fn(n, |i, _| {
        Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)
    });
    let v = finite_rank(&[e1.clone()], &[2.0], n).unwrap();
    assert_eq!(v.data[(0, 0)].re, 2.0);
    assert!((0..n).all(|i| (0..n).all(|j| (i, j) == (0, 0) || v.data[(i, j)].norm() == 0.0)));

    // normalized 1/n^2 profile: unit trace projector
    let mut psi = nalgebra::DVector::from_fn(n, |i, _| {
        Complex64::new(1.0 / ((i + 1) as f64).powi(2), 0.0)
    });
    psi /= Complex64::new(psi.norm(), 0.0);
    let p = finite_rank(&[psi], &[1.0], n).unwrap();
    let trace: f64 = (0..n).map(|i| p.data[(i, i)].re).sum();
    assert!((trace - 1.0).abs() < 1e-12);

    // two orthogonal unit vectors with couplings (1, -1)
    let u1 = nalgebra::DVector::from_fn(n, |i, _| {
        Complex64::new(if i == 2 { 1.0 } else { 0.0 }, 0.0)
    });
    let u2 = nalgebra::DVector::from_fn(n, |i, _| {
        Complex64::new(if i == 5 { 1.0 } else { 0.0 }, 0.0)
    });
    let v = finite_rank(&[u1, u2], &[1.0, -1.0], n).unwrap();
    let (vals, _) = linalg::eigh(&v.data);
    assert!((vals[0] + 1.0).abs() < 1e-12);
    assert!((vals[n - 1] - 1.0).abs() < 1e-12);
    assert!(vals[1..n - 1].iter().all(|l| l.abs() < 1e-12));
    // numerical rank at 1e-10
    let rank = linalg::singular_values(&v.data, n).iter().filter(|&&s| s > 1e-10).count();
    assert_eq!(rank, 2);
}

#[test]
fn finite_rank_rejects_mismatch() {
    let v = nalgebra::DVector::from_element(4, Complex64::new(1.0, 0.0));
    assert!(matches!(
        finite_rank(&[v.clone()], &[1.0, 2.0], 4),
        Err(crate::error::Error::RankMismatch(1, 2))
    ));
    assert!(matches!(
        finite_rank(&[v], &[1.0], 5),
        Err(crate::error::Error::VectorLength { expect: 5, got: 4 })
    ));
}

#[test]
fn gsah_probe_inverse_square_converges() {
    let v = diagonal_potential(&spec(SequenceKind::Power { p: 2.0 }, 2048), 2048).unwrap();
    let rep = gsah_probe(&v, 1.0, (1.0, 2.0), 1e4).unwrap();
    assert_eq!(rep.verdict, Verdict::Converges, "flags {:?}", rep.flags);
    assert!((rep.tail_exponent + 2.0).abs() < 0.05, "exponent {}", rep.tail_exponent);
    assert!(rep.flags.iter().any(|f| f.contains("shrunk")), "horizon flag expected");
}

#[test]
fn gsah_probe_identity_diverges() {
    let n = 512;
    let v = OperatorMatrix::from_data(
        Space::HalfLine { n },
        DMatrix::from_fn(n, n, |i, j| {
            if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
        }),
        "I",
    );
    let rep = gsah_probe(&v, 1.0, (1.0, 2.0), 1e3).unwrap();
    assert_eq!(rep.verdict, Verdict::Diverges);
    assert!(rep.tail_exponent.abs() < 0.05, "exponent {}", rep.tail_exponent);
}

#[test]
fn gsah_probe_finite_support_is_exactly_zero() {
    let spike = spec(SequenceKind::Explicit(vec![3.0]), 256);
    let v = diagonal_potential(&spike, 256).unwrap();
    let rep = gsah_probe(&v, 1.0, (1.0, 2.0), 100.0).unwrap();
    assert_eq!(rep.verdict, Verdict::Converges);
    assert_eq!(rep.basis, VerdictBasis::ExactZero);
}

#[test]
fn condition_s_implies_gsah_on_power_family() {
    for p in [1.5, 2.0, 3.0] {
        let s = spec(SequenceKind::Power { p }, 8192);
        let cond = admissibility_check(&s, Condition::S, (1.0, 2.0), 2e3).unwrap();
        assert_eq!(cond.verdict, Verdict::Converges);
        assert!(cond.tail_exponent < -1.5 + 0.05);
        let v = diagonal_potential(&s, 4096).unwrap();
        let probe = gsah_probe(&v, 1.0, (1.0, 2.0), 2e3).unwrap();
        assert_eq!(probe.verdict, Verdict::Converges, "p = {p}");
    }
}
