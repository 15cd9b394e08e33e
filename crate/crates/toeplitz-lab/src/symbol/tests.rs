use super::*;
use crate::interval::Interval;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn two_cos_entries() -> Vec<(Vec<i64>, Complex64)> {
    vec![(vec![1], c(1.0, 0.0)), (vec![-1], c(1.0, 0.0))]
}

#[test]
fn from_coefficients_two_cos() {
    let s = Symbol::from_coefficients(&two_cos_entries(), 1).unwrap();
    assert!(s.is_real_valued());
    assert_eq!(s.bandwidth(), &[1]);
    for k in 0..8 {
        let t = 2.0 * PI * k as f64 / 8.0;
        assert!((s.eval_real(&[t]) - 2.0 * t.cos()).abs() < 1e-14);
    }
}

#[test]
fn from_coefficients_empty_is_zero() {
    let s = Symbol::from_coefficients(&[], 1).unwrap();
    assert!(s.is_zero());
    let (lo, hi) = s.range_on_grid(64);
    assert_eq!((lo, hi), (0.0, 0.0));
}

#[test]
fn from_coefficients_rejects_duplicates() {
    let entries = vec![(vec![2], c(1.0, 0.0)), (vec![2], c(0.5, 0.0))];
    match Symbol::from_coefficients(&entries, 1) {
        Err(crate::error::Error::DuplicateIndex(idx)) => assert_eq!(idx, vec![2]),
        other => panic!("expected duplicate-index rejection, got {other:?}"),
    }
}

#[test]
fn sample_fourier_recovers_band_limited_exactly() {
    let s = Symbol::sample_fourier(|t| c(2.0 * t[0].cos(), 0.0), &[2], &[16]).unwrap();
    assert_eq!(s.coefficient_count(), 2);
    assert!((s.coeff1(1) - c(1.0, 0.0)).norm() < 1e-14);
    assert!((s.coeff1(-1) - c(1.0, 0.0)).norm() < 1e-14);
    assert!(s.is_real_valued());
}

#[test]
fn sample_fourier_2d_laplacian() {
    let s = Symbol::sample_fourier(
        |t| c(2.0 * t[0].cos() + 2.0 * t[1].cos(), 0.0),
        &[1, 1],
        &[8, 8],
    )
    .unwrap();
    assert_eq!(s.coefficient_count(), 4);
    for idx in [[1i64, 0], [-1, 0], [0, 1], [0, -1]] {
        assert!((s.coeff(&idx) - c(1.0, 0.0)).norm() < 1e-14);
    }
}

#[test]
fn sample_fourier_exp_cos_against_quadrature_oracle() {
    let s = Symbol::sample_fourier(|t| c(t[0].cos().exp(), 0.0), &[12], &[64]).unwrap();
    // independent oracle: direct 10^6-point quadrature for the 0-th coefficient
    let m = 1_000_000usize;
    let oracle: f64 =
        (0..m).map(|j| (2.0 * PI * j as f64 / m as f64).cos().exp()).sum::<f64>() / m as f64;
    assert!((s.coeff1(0).re - oracle).abs() < 1e-10, "got {}, oracle {}", s.coeff1(0).re, oracle);
    // the sampled trig polynomial tracks the evaluator on a diagnostic grid
    assert!(s.max_deviation(|t| c(t[0].cos().exp(), 0.0), 257) < 1e-10);
}

#[test]
fn sample_fourier_rejects_non_finite() {
    let r = Symbol::sample_fourier(
        |t| if t[0] == 0.0 { c(f64::NAN, 0.0) } else { c(1.0, 0.0) },
        &[1],
        &[8],
    );
    match r {
        Err(crate::error::Error::NonFiniteSample(p)) => assert_eq!(p, vec![0.0]),
        other => panic!("expected non-finite rejection, got {other:?}"),
    }
}

#[test]
fn sample_fourier_oversampling_guard() {
    assert!(matches!(
        Symbol::sample_fourier(|_| c(0.0, 0.0), &[2], &[11]),
        Err(crate::error::Error::GridTooCoarse { .. })
    ));
}

#[test]
fn derivative_of_two_cos() {
    let s = Symbol::two_cos();
    let d = s.derivative(0).unwrap();
    assert!((d.coeff1(1) - c(0.0, 1.0)).norm() < 1e-15);
    assert!((d.coeff1(-1) - c(0.0, -1.0)).norm() < 1e-15);
    assert!(d.is_real_valued());
    // centered finite differences at 8 points, O(h^2)
    let h = 1e-6;
    for k in 0..8 {
        let t = 2.0 * PI * k as f64 / 8.0 + 0.1;
        let fd = (s.eval_real(&[t + h]) - s.eval_real(&[t - h])) / (2.0 * h);
        assert!((fd - d.eval_real(&[t])).abs() < 1e-8);
    }
}

#[test]
fn derivative_of_constant_is_zero() {
    assert!(Symbol::constant(1, 3.0).derivative(0).unwrap().is_zero());
}

#[test]
fn second_derivative_of_two_cos() {
    let s = Symbol::two_cos();
    let d2 = s.derivative(0).unwrap().derivative(0).unwrap();
    let neg = s.scale(c(-1.0, 0.0));
    assert_eq!(d2, neg);
}

#[test]
fn multiply_two_cos_squared() {
    let s = Symbol::two_cos();
    let sq = s.multiply(&s).unwrap();
    assert!((sq.coeff1(0) - c(2.0, 0.0)).norm() < 1e-15);
    assert!((sq.coeff1(2) - c(1.0, 0.0)).norm() < 1e-15);
    assert!((sq.coeff1(-2) - c(1.0, 0.0)).norm() < 1e-15);
    assert_eq!(sq.coefficient_count(), 3);
}

#[test]
fn multiply_by_one_is_identity() {
    let s = Symbol::from_coefficients(
        &[(vec![2], c(0.3, -0.1)), (vec![0], c(1.5, 0.0)), (vec![-2], c(0.3, 0.1))],
        1,
    )
    .unwrap();
    let one = Symbol::constant(1, 1.0);
    assert_eq!(s.multiply(&one).unwrap(), s);
}

#[test]
fn multiply_cos_times_sin_is_sin_double() {
    // 2sinθ has coefficients ∓i at ±1
    let sin2 = Symbol::from_coefficients(&[(vec![1], c(0.0, -1.0)), (vec![-1], c(0.0, 1.0))], 1)
        .unwrap();
    let prod = Symbol::two_cos().multiply(&sin2).unwrap();
    for k in 0..16 {
        let t = 2.0 * PI * k as f64 / 16.0;
        assert!((prod.eval_real(&[t]) - 2.0 * (2.0 * t).sin()).abs() < 1e-13);
    }
}

#[test]
fn critical_set_two_cos() {
    let s = Symbol::two_cos();
    let ks = s.critical_set(256, 1e-10).unwrap();
    assert_eq!(ks.points.len(), 2);
    assert!(ks.is_exhaustive);
    assert!((ks.points[0][0] - 0.0).abs() < 1e-9);
    assert!((ks.points[1][0] - PI).abs() < 1e-9);
    assert!(ks.degenerate.iter().all(|d| !d));
    let th = s.thresholds(&ks);
    assert!((th[0] + 2.0).abs() < 1e-12 && (th[1] - 2.0).abs() < 1e-12);
}

#[test]
fn critical_set_2d_laplacian() {
    let s = Symbol::laplacian(2).unwrap();
    let ks = s.critical_set(24, 1e-9).unwrap();
    assert_eq!(ks.points.len(), 4, "points: {:?}", ks.points);
    for p in &ks.points {
        for &coord in p {
            let near0 = coord.min(2.0 * PI - coord) < 1e-8;
            let near_pi = (coord - PI).abs() < 1e-8;
            assert!(near0 || near_pi, "unexpected coordinate {coord}");
        }
    }
    let th = s.thresholds(&ks);
    assert_eq!(th.len(), 3);
    assert!((th[0] + 4.0).abs() < 1e-9);
    assert!(th[1].abs() < 1e-9);
    assert!((th[2] - 4.0).abs() < 1e-9);
}

#[test]
fn critical_set_band_two_symbol() {
    // f = 2cosθ + cos2θ, f' = -2sinθ(1 + 2cosθ): zeros at 0, 2π/3, π, 4π/3
    let s = Symbol::from_coefficients(
        &[
            (vec![1], c(1.0, 0.0)),
            (vec![-1], c(1.0, 0.0)),
            (vec![2], c(0.5, 0.0)),
            (vec![-2], c(0.5, 0.0)),
        ],
        1,
    )
    .unwrap();
    let ks = s.critical_set(512, 1e-10).unwrap();
    let expect = [0.0, 2.0 * PI / 3.0, PI, 4.0 * PI / 3.0];
    assert_eq!(ks.points.len(), 4);
    for (p, e) in ks.points.iter().zip(expect) {
        assert!((p[0] - e).abs() < 1e-9, "point {} vs {}", p[0], e);
    }
    let th = s.thresholds(&ks);
    assert_eq!(th.len(), 3);
    assert!((th[0] + 1.5).abs() < 1e-9);
    assert!((th[1] + 1.0).abs() < 1e-9);
    assert!((th[2] - 3.0).abs() < 1e-9);
}

#[test]
fn critical_set_rejects_constant() {
    assert!(matches!(
        Symbol::constant(1, 2.0).critical_set(64, 1e-8),
        Err(crate::error::Error::ConstantSymbol)
    ));
}

#[test]
fn mourre_constants_mid_band() {
    // g = |f'|^2 = 4sin²θ = 4 - f², so on f ∈ [-1,1]: min 3, max 4
    let f = Symbol::two_cos();
    let g = f.derivative(0).unwrap();
    let g2 = g.multiply(&g).unwrap();
    let iv = Interval::new(-1.0, 1.0).unwrap();
    let mc = f.mourre_constants(&g2, iv, 4096, &DEFAULT_ENLARGEMENTS).unwrap();
    assert!((mc.lower - 3.0).abs() < 1e-6, "lower {}", mc.lower);
    assert!((mc.upper - 4.0).abs() < 1e-9, "upper {}", mc.upper);
    assert!(mc.ordering_holds());
    assert!(mc.preimage_measure > 0.2 && mc.preimage_measure < 0.5);
    // enlargement rows are monotone: larger margin -> smaller lower constant
    for w in mc.enlargements.windows(2) {
        assert!(w[0].lower <= w[1].lower + 1e-12);
        assert!(w[0].upper >= w[1].upper - 1e-12);
    }
    assert!(mc.lower_sharp <= mc.lower && mc.lower - mc.lower_sharp < 0.1);
}

#[test]
fn mourre_constants_full_band_touches_thresholds() {
    let f = Symbol::two_cos();
    let g = f.derivative(0).unwrap();
    let g2 = g.multiply(&g).unwrap();
    let iv = Interval::new(-2.0, 2.0).unwrap();
    let mc = f.mourre_constants(&g2, iv, 4096, &DEFAULT_ENLARGEMENTS).unwrap();
    assert!(mc.lower.abs() < 1e-12, "lower {}", mc.lower);
}

#[test]
fn mourre_constants_point_interval() {
    let f = Symbol::two_cos();
    let g = f.derivative(0).unwrap();
    let g2 = g.multiply(&g).unwrap();
    let mc = f
        .mourre_constants(&g2, Interval::point(0.0), 4096, &DEFAULT_ENLARGEMENTS)
        .unwrap();
    assert!((mc.lower - 4.0).abs() < 1e-9, "lower {}", mc.lower);
    assert!((mc.upper - 4.0).abs() < 1e-9, "upper {}", mc.upper);
}

#[test]
fn mourre_constants_empty_preimage() {
    let f = Symbol::two_cos();
    let g2 = Symbol::constant(1, 1.0);
    assert!(matches!(
        f.mourre_constants(&g2, Interval::new(5.0, 6.0).unwrap(), 512, &[]),
        Err(crate::error::Error::EmptyPreimage)
    ));
}

#[test]
fn positivity_away_from_thresholds() {
    // 20 deterministic intervals with closure away from {-2, 2}
    let f = Symbol::two_cos();
    let g = f.derivative(0).unwrap();
    let g2 = g.multiply(&g).unwrap();
    for k in 0..20 {
        let center = -1.7 + 3.4 * (k as f64) / 19.0;
        let half = 0.1 + 0.05 * ((k * 7) % 3) as f64;
        let lo = (center - half).max(-1.9);
        let hi = (center + half).min(1.9);
        let mc = f
            .mourre_constants(&g2, Interval::new(lo, hi).unwrap(), 2048, &DEFAULT_ENLARGEMENTS)
            .unwrap();
        assert!(mc.lower > 0.0, "interval [{lo},{hi}] gave c = {}", mc.lower);
        assert!(mc.ordering_holds());
    }
}

#[test]
fn thresholds_live_inside_range() {
    let s = Symbol::from_coefficients(
        &[
            (vec![1], c(1.0, 0.0)),
            (vec![-1], c(1.0, 0.0)),
            (vec![3], c(0.2, 0.0)),
            (vec![-3], c(0.2, 0.0)),
        ],
        1,
    )
    .unwrap();
    let ks = s.critical_set(512, 1e-9).unwrap();
    let th = s.thresholds(&ks);
    let (lo, hi) = s.range_on_grid(4096);
    for t in th {
        assert!(t >= lo - 1e-9 && t <= hi + 1e-9);
    }
}

#[test]
fn realness_flag_from_sampling() {
    let s = Symbol::sample_fourier(
        |t| c((t[0].cos() + 0.3 * (2.0 * t[0]).sin()).tanh(), 0.0),
        &[10],
        &[64],
    )
    .unwrap();
    assert!(s.is_real_valued());
    assert!(s.realness_defect() < 1e-12);
    let complex = Symbol::from_coefficients(&[(vec![1], c(1.0, 0.0))], 1).unwrap();
    assert!(!complex.is_real_valued());
}

#[test]
fn text_round_trip_is_exact() {
    let s = Symbol::from_coefficients(
        &[
            (vec![0], c(1.0 / 3.0, 0.0)),
            (vec![1], c(0.1, -0.7e-3)),
            (vec![-1], c(0.1, 0.7e-3)),
            (vec![5], c(2.5e-13, 1.0)),
        ],
        1,
    )
    .unwrap();
    let text = s.to_text();
    let back = Symbol::from_text(&text).unwrap();
    assert_eq!(s, back);

    let s2 = Symbol::laplacian(2).unwrap();
    assert_eq!(Symbol::from_text(&s2.to_text()).unwrap(), s2);
}

#[test]
fn grad_norm_squared_matches_pointwise() {
    let s = Symbol::laplacian(2).unwrap();
    let g2 = s.grad_norm_squared().unwrap();
    for k in 0..10 {
        let t = [0.37 * k as f64, 0.61 * k as f64];
        let expect = 4.0 * t[0].sin().powi(2) + 4.0 * t[1].sin().powi(2);
        assert!((g2.eval_real(&t) - expect).abs() < 1e-12);
    }
}
