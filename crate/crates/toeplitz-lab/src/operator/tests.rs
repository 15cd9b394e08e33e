use super::identity::{commutator_formula_defect, holder_bound_check, sarason_defect};
use super::*;
use crate::linalg;
use crate::symbol::Symbol;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random real-valued band-limited symbol with conjugate-symmetric coefficients.
fn random_real_symbol(rng: &mut ChaCha8Rng, bandwidth: usize) -> Symbol {
    let mut entries = vec![(vec![0i64], c(rng.gen_range(-1.0..1.0), 0.0))];
    for k in 1..=bandwidth as i64 {
        let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        entries.push((vec![k], v));
        entries.push((vec![-k], v.conj()));
    }
    Symbol::from_coefficients(&entries, 1).unwrap()
}

#[test]
fn toeplitz_two_cos_n3() {
    let t = toeplitz_matrix(&Symbol::two_cos(), 3).unwrap();
    let expect = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(t.data[(i, j)], c(expect[i][j], 0.0));
        }
    }
    assert!(t.hermitian);
    let (vals, _) = linalg::eigh(&t.data);
    let expect = [-(2.0f64).sqrt(), 0.0, (2.0f64).sqrt()];
    for (v, e) in vals.iter().zip(expect) {
        assert!((v - e).abs() < 1e-12);
    }
}

#[test]
fn toeplitz_of_one_is_identity() {
    let t = toeplitz_matrix(&Symbol::constant(1, 1.0), 5).unwrap();
    assert_eq!(t.data, nalgebra::DMatrix::identity(5, 5).map(|x: f64| c(x, 0.0)));
}

#[test]
fn toeplitz_norm_bounded_by_sup() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let f = random_real_symbol(&mut rng, 4);
        let t = toeplitz_matrix(&f, 50).unwrap();
        let sup = f.max_abs_on_grid(4096);
        assert!(linalg::op_norm(&t.data) <= sup + 1e-9);
    }
}

#[test]
fn toeplitz_rejects_2d() {
    let f = Symbol::laplacian(2).unwrap();
    assert!(matches!(toeplitz_matrix(&f, 4), Err(crate::error::Error::NotOneDim(2))));
}

#[test]
fn toeplitz_structure_depends_on_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = random_real_symbol(&mut rng, 3);
    let t = toeplitz_matrix(&f, 12).unwrap();
    let h = hankel_matrix(&f, 12).unwrap();
    for i in 0..12usize {
        for j in 0..12usize {
            if i >= 1 && j >= 1 {
                assert_eq!(t.data[(i, j)], t.data[(i - 1, j - 1)]);
            }
            if i >= 1 && j + 1 < 12 {
                assert_eq!(h.data[(i, j)], h.data[(i - 1, j + 1)]);
            }
        }
    }
}

#[test]
fn laurent_truncate_stencil() {
    let l = laurent_matrix(&Symbol::two_cos(), 1, Boundary::Truncate).unwrap();
    let expect = [[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(l.data[(i, j)], c(expect[i][j], 0.0));
        }
    }
}

#[test]
fn laurent_periodic_circulant_spectrum() {
    let l = laurent_matrix(&Symbol::two_cos(), 2, Boundary::Periodic).unwrap();
    let (vals, _) = linalg::eigh(&l.data);
    let mut expect: Vec<f64> = (0..5).map(|k| 2.0 * (2.0 * PI * k as f64 / 5.0).cos()).collect();
    expect.sort_by(f64::total_cmp);
    for (v, e) in vals.iter().zip(expect) {
        assert!((v - e).abs() < 1e-12, "{v} vs {e}");
    }
}

#[test]
fn laurent_periodic_needs_room() {
    assert!(matches!(
        laurent_matrix(&Symbol::two_cos(), 1, Boundary::Periodic),
        Err(crate::error::Error::BoxTooSmall { .. })
    ));
}

#[test]
fn laurent_2d_laplacian_center_row() {
    let f = Symbol::laplacian(2).unwrap();
    let l = laurent_matrix(&f, 1, Boundary::Truncate).unwrap();
    assert_eq!(l.dim(), 9);
    let space = l.space;
    let center = space.flat(&[0, 0]).unwrap();
    let mut ones = 0;
    for j in 0..9 {
        let v = l.data[(center, j)];
        if v == c(1.0, 0.0) {
            ones += 1;
        } else {
            assert_eq!(v, c(0.0, 0.0));
        }
    }
    assert_eq!(ones, 4);
}

#[test]
fn hankel_two_cos_is_rank_one() {
    let h = hankel_matrix(&Symbol::two_cos(), 3).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let expect = if i == 0 && j == 0 { c(1.0, 0.0) } else { c(0.0, 0.0) };
            assert_eq!(h.data[(i, j)], expect);
        }
    }
}

#[test]
fn hankel_vanishes_without_analytic_coefficients() {
    // only non-positive frequencies present
    let f = Symbol::from_coefficients(
        &[(vec![0], c(1.0, 0.0)), (vec![-2], c(0.5, 0.0))],
        1,
    )
    .unwrap();
    let h = hankel_matrix(&f, 6).unwrap();
    assert_eq!(h.max_abs(), 0.0);
}

#[test]
fn hankel_of_smooth_symbol_has_fast_singular_decay() {
    let f = Symbol::sample_fourier(|t| c(t[0].cos().exp(), 0.0), &[16], &[80]).unwrap();
    let h = hankel_matrix(&f, 64).unwrap();
    let s = super::identity::singular_decay(&h, 14);
    assert!(s[11] < 1e-8, "sigma_12 = {}", s[11]);
    assert!(s[0] > 0.1);
}

#[test]
fn position_matrices() {
    let x = position_matrix(Space::HalfLine { n: 3 }, 0).unwrap();
    for (i, expect) in [1.0, 2.0, 3.0].iter().enumerate() {
        assert_eq!(x.data[(i, i)], c(*expect, 0.0));
    }
    let x = position_matrix(Space::LatticeBox { dim: 1, radius: 1 }, 0).unwrap();
    for (i, expect) in [-1.0, 0.0, 1.0].iter().enumerate() {
        assert_eq!(x.data[(i, i)], c(*expect, 0.0));
    }
    let x = position_matrix(Space::LatticeBox { dim: 2, radius: 1 }, 1).unwrap();
    let expect = [-1.0, 0.0, 1.0, -1.0, 0.0, 1.0, -1.0, 0.0, 1.0];
    for (i, e) in expect.iter().enumerate() {
        assert_eq!(x.data[(i, i)], c(*e, 0.0));
    }
}

#[test]
fn conjugate_operator_entries() {
    let g = Symbol::two_cos().derivative(0).unwrap(); // -2 sin θ
    let a = conjugate_operator_halfline(&g, 3).unwrap();
    assert!(a.hermitian);
    for i in 0..2usize {
        let n = i as f64 + 1.0;
        assert!((a.data[(i, i + 1)] - c(0.0, -(n + 0.5))).norm() < 1e-15);
        assert!((a.data[(i + 1, i)] - c(0.0, n + 0.5)).norm() < 1e-15);
    }
    let zero = conjugate_operator_halfline(&Symbol::zero(1), 4).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn conjugate_operator_rejects_complex_symbol() {
    let g = Symbol::from_coefficients(&[(vec![1], c(1.0, 0.0))], 1).unwrap();
    assert!(matches!(
        conjugate_operator_halfline(&g, 4),
        Err(crate::error::Error::NotRealValued)
    ));
}

#[test]
fn conjugate_operator_lattice_hermitian() {
    let f = Symbol::laplacian(2).unwrap();
    let a = conjugate_operator_for(&f, Space::LatticeBox { dim: 2, radius: 3 }).unwrap();
    assert!(a.hermitian);
    assert!(a.hermiticity_defect() < 1e-14);
}

#[test]
fn commutator_position_toeplitz() {
    let f = Symbol::two_cos();
    let n = 8;
    let t = toeplitz_matrix(&f, n).unwrap();
    let x = position_matrix(Space::HalfLine { n }, 0).unwrap();
    let br = commutator(&x, &t).unwrap();
    // equals S - S^* and equals -i T_{f'}, with no truncation defect at all
    let tfp = toeplitz_matrix(&f.derivative(0).unwrap(), n).unwrap();
    let diff = &br.data - tfp.data.map(|z| c(0.0, -1.0) * z);
    assert!(diff.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-15);
    for i in 0..n - 1 {
        assert_eq!(br.data[(i + 1, i)], c(1.0, 0.0));
        assert_eq!(br.data[(i, i + 1)], c(-1.0, 0.0));
    }
}

#[test]
fn commutator_with_self_vanishes() {
    let t = toeplitz_matrix(&Symbol::two_cos(), 6).unwrap();
    let z = commutator(&t, &t).unwrap();
    assert_eq!(z.max_abs(), 0.0);
}

#[test]
fn periodic_laurent_operators_commute() {
    let f = Symbol::two_cos();
    let g = Symbol::from_coefficients(
        &[
            (vec![1], c(1.0, 0.0)),
            (vec![-1], c(1.0, 0.0)),
            (vec![2], c(0.5, 0.0)),
            (vec![-2], c(0.5, 0.0)),
        ],
        1,
    )
    .unwrap();
    let lf = laurent_matrix(&f, 4, Boundary::Periodic).unwrap();
    let lg = laurent_matrix(&g, 4, Boundary::Periodic).unwrap();
    let br = commutator(&lf, &lg).unwrap();
    assert!(br.max_abs() < 1e-12);
}

#[test]
fn commutator_rejects_space_mismatch() {
    let t = toeplitz_matrix(&Symbol::two_cos(), 4).unwrap();
    let l = laurent_matrix(&Symbol::two_cos(), 2, Boundary::Truncate).unwrap();
    assert!(matches!(commutator(&t, &l), Err(crate::error::Error::SpaceMismatch(..))));
}

#[test]
fn sarason_defect_two_cos() {
    let f = Symbol::two_cos();
    let rep = sarason_defect(&f, &f, 4).unwrap();
    assert!(rep.interior_max < 1e-14, "interior {}", rep.interior_max);
    assert!(rep.concentrated_at_edge());
    // the unit Hankel correction accounts for (T_{f^2} - T_f^2)_{11} = 2 - 1
    let t = toeplitz_matrix(&f, 4).unwrap();
    let tsq = &t.data * &t.data;
    let tf2 = toeplitz_matrix(&f.multiply(&f).unwrap(), 4).unwrap();
    assert_eq!(tf2.data[(0, 0)] - tsq[(0, 0)], c(1.0, 0.0));
}

#[test]
fn sarason_defect_identity_symbol() {
    let one = Symbol::constant(1, 1.0);
    let g = Symbol::two_cos();
    let rep = sarason_defect(&one, &g, 6).unwrap();
    assert_eq!(rep.interior_max, 0.0);
    assert_eq!(rep.boundary_max, 0.0);
}

#[test]
fn sarason_defect_random_band4_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10 {
        let f = random_real_symbol(&mut rng, 4);
        let g = random_real_symbol(&mut rng, 4);
        let rep = sarason_defect(&f, &g, 32).unwrap();
        assert!(rep.interior_max < 1e-12, "interior {}", rep.interior_max);
    }
}

#[test]
fn sarason_correction_matches_laurent_cross_block() {
    // independent route: the correction is the (1..n)x(1..n) block of
    // P L_f P^perp L_g P, summed directly from coefficients over sites <= 0
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let f = random_real_symbol(&mut rng, 3);
    let g = random_real_symbol(&mut rng, 3);
    let n = 12;
    let hf = hankel_matrix(&f, n).unwrap();
    let hg_bar = hankel_matrix(&g.conj(), n).unwrap();
    let corr = &hf.data * hg_bar.data.adjoint();
    for row in 1..=n as i64 {
        for col in 1..=n as i64 {
            let mut oracle = c(0.0, 0.0);
            for m in -10..=0i64 {
                oracle += f.coeff1(row - m) * g.coeff1(m - col);
            }
            assert!(
                (corr[((row - 1) as usize, (col - 1) as usize)] - oracle).norm() < 1e-13,
                "mismatch at ({row},{col})"
            );
        }
    }
}

#[test]
fn position_commutator_identity_is_exact_at_truncation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for bw in [1usize, 3, 5] {
        let h = random_real_symbol(&mut rng, bw);
        let n = 4 * bw + 8;
        let t = toeplitz_matrix(&h, n).unwrap();
        let x = position_matrix(Space::HalfLine { n }, 0).unwrap();
        let br = commutator(&x, &t).unwrap();
        let tp = toeplitz_matrix(&h.derivative(0).unwrap(), n).unwrap();
        let defect = &br.data + tp.data.map(|z| c(0.0, 1.0) * z);
        let worst = defect.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "bw {bw}: defect {worst}");
    }
}

#[test]
fn commutator_formula_matches_bracket_in_interior() {
    // the position commutator is exact at truncation, so the assembled
    // right-hand side agrees with the bracket of truncations everywhere
    let f = Symbol::two_cos();
    let g = f.derivative(0).unwrap();
    let rep = commutator_formula_defect(&f, &g, 64).unwrap();
    assert!(rep.interior_max < 1e-12, "interior {}", rep.interior_max);
    assert!(rep.boundary_max < 1e-10, "boundary {}", rep.boundary_max);
}

#[test]
fn commutator_formula_rhs_constant_symbol() {
    let f = Symbol::constant(1, 2.0);
    let g = Symbol::two_cos();
    let rhs = super::identity::commutator_formula_rhs(&f, &g, 8).unwrap();
    assert_eq!(rhs.max_abs(), 0.0);
}

#[test]
fn commutator_formula_rhs_is_hermitian() {
    let f = Symbol::two_cos();
    let rhs = super::identity::commutator_formula_rhs(&f, &f, 12).unwrap();
    assert!(rhs.hermitian);
}

#[test]
fn relative_bounds_stay_uniform_in_truncation() {
    let g = Symbol::two_cos().derivative(0).unwrap();
    let norm_ax = |n: usize| {
        let a = conjugate_operator_halfline(&g, n).unwrap();
        let xinv = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j { c(1.0 / (i as f64 + 1.0), 0.0) } else { c(0.0, 0.0) }
        });
        let ax = &a.data * &xinv;
        let a2x2 = &a.data * &a.data * &xinv * &xinv;
        (linalg::op_norm(&ax), linalg::op_norm(&a2x2))
    };
    let (ax128, a2128) = norm_ax(128);
    let (ax256, a2256) = norm_ax(256);
    assert!(ax256 / ax128 <= 1.05, "A X^-1 ratio {}", ax256 / ax128);
    assert!(a2256 / a2128 <= 1.05, "A^2 X^-2 ratio {}", a2256 / a2128);
}

#[test]
fn toeplitz_is_corner_block_of_laurent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_real_symbol(&mut rng, 3);
    let n = 10;
    let t = toeplitz_matrix(&f, n).unwrap();
    let l = laurent_matrix(&f, n, Boundary::Truncate).unwrap();
    // sites 1..=n of the box are flat indices n+1..=2n
    for i in 0..n {
        for j in 0..n {
            assert_eq!(t.data[(i, j)], l.data[(n + 1 + i, n + 1 + j)]);
        }
    }
}

#[test]
fn singular_decay_edge_cases() {
    let z = OperatorMatrix::from_data(
        Space::HalfLine { n: 8 },
        nalgebra::DMatrix::from_element(8, 8, c(0.0, 0.0)),
        "0",
    );
    assert!(super::identity::singular_decay(&z, 3).iter().all(|&s| s == 0.0));
    let x = position_matrix(Space::HalfLine { n: 128 }, 0).unwrap();
    let s = super::identity::singular_decay(&x, 10);
    assert!((s[0] - 128.0).abs() < 1e-9);
    assert!(s[9] > 100.0, "no decay expected for the position operator");
}

#[test]
fn holder_bound_tight_for_two_cos() {
    let f = Symbol::two_cos();
    let (lhs, rhs) = holder_bound_check(&f, &f, |_| 1.0, |_| 1.0, 1, 1, 2.0).unwrap();
    assert!((lhs - 1.0).abs() < 1e-14);
    assert!((rhs - 1.0).abs() < 1e-14);
}

#[test]
fn holder_bound_empty_tail() {
    let f = Symbol::two_cos();
    let (lhs, rhs) = holder_bound_check(&f, &f, |_| 1.0, |_| 1.0, 2, 1, 2.0).unwrap();
    assert_eq!(lhs, 0.0);
    assert!(rhs >= 0.0);
}

#[test]
fn holder_bound_random_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f = Symbol::sample_fourier(|t| c((t[0].cos() * 1.3).exp(), 0.0), &[10], &[64]).unwrap();
    let g = Symbol::sample_fourier(|t| c((t[0].sin() + 0.2 * (3.0 * t[0]).cos()).exp(), 0.0), &[10], &[64])
        .unwrap();
    for _ in 0..20 {
        let p = rng.gen_range(1..8usize);
        let q = rng.gen_range(1..8usize);
        let alpha = rng.gen_range(1.1..4.0);
        let (lhs, rhs) = holder_bound_check(
            &f,
            &g,
            |x| 1.0 / (1.0 + x),
            |x| (-0.1 * x).exp(),
            p,
            q,
            alpha,
        )
        .unwrap();
        assert!(lhs <= rhs + 1e-12, "p={p} q={q} alpha={alpha}: {lhs} > {rhs}");
    }
}

#[test]
fn binary_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let f = random_real_symbol(&mut rng, 2);
    let a = conjugate_operator_halfline(&f.derivative(0).unwrap(), 9).unwrap();
    let path = dir.path().join("a.tmlb");
    a.write_binary(&path).unwrap();
    let back = OperatorMatrix::read_binary(&path).unwrap();
    assert_eq!(a.space, back.space);
    assert_eq!(a.data, back.data);
    assert_eq!(a.hermitian, back.hermitian);

    let l = laurent_matrix(&Symbol::laplacian(2).unwrap(), 2, Boundary::Truncate).unwrap();
    let path = dir.path().join("l.tmlb");
    l.write_binary(&path).unwrap();
    let back = OperatorMatrix::read_binary(&path).unwrap();
    assert_eq!(l.space, back.space);
    assert_eq!(l.data, back.data);

    let csv = dir.path().join("l.csv");
    l.write_csv_debug(&csv).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("row,col,re,im\n"));
    assert_eq!(text.lines().count() - 1, l.data.iter().filter(|z| z.norm() > 1e-14).count());
}

#[test]
fn sparse_applies_match_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let f = random_real_symbol(&mut rng, 3);
    let n = 24;
    let t = toeplitz_matrix(&f, n).unwrap();
    let v = nalgebra::DVector::from_fn(n, |i, _| c((i as f64).sin(), (i as f64 * 0.3).cos()));
    let dense = &t.data * &v;
    let sparse = apply_symbol_halfline(&f, &v);
    assert!((dense - sparse).norm() < 1e-12);

    let g = Symbol::laplacian(2).unwrap();
    let radius = 3;
    let l = laurent_matrix(&g, radius, Boundary::Truncate).unwrap();
    let m = l.dim();
    let w = nalgebra::DVector::from_fn(m, |i, _| c((i as f64).cos(), 0.1 * i as f64));
    let dense = &l.data * &w;
    let sparse = apply_symbol_lattice(&g, radius, &w);
    assert!((dense - sparse).norm() < 1e-12);
}
