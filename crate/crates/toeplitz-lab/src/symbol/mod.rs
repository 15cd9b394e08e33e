//! Band-limited symbols on the d-torus held as finite Fourier data.
//!
//! A `Symbol` is the single source for every function-level object in the
//! library: f itself, derivatives f' and ∇f, products h = fg, conjugates,
//! and the weights |f'|², |∇f|² that drive the commutator positivity
//! estimates. All values are immutable after construction.

mod constants;
mod critical;
mod io;

pub use constants::{EnlargementRow, MourreConstants, DEFAULT_ENLARGEMENTS};
pub use critical::CriticalSet;

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;

/// Coefficients with modulus at or below this are treated as absent.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Conjugate-symmetry slack used to classify a symbol as real-valued.
pub const REALNESS_TOL: f64 = 1e-12;

pub type MultiIndex = Vec<i64>;

/// A trigonometric polynomial on T^d stored as a finite map α ↦ ĉ_α.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    dim: usize,
    coeffs: BTreeMap<MultiIndex, Complex64>,
    bandwidth: Vec<i64>,
    real_valued: bool,
}

impl Symbol {
    /// Build a symbol from explicit Fourier coefficients.
    pub fn from_coefficients(entries: &[(Vec<i64>, Complex64)], dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDim);
        }
        let mut coeffs = BTreeMap::new();
        for (idx, val) in entries {
            if idx.len() != dim {
                return Err(Error::IndexArity { index: idx.clone(), dim });
            }
            if coeffs.contains_key(idx) {
                return Err(Error::DuplicateIndex(idx.clone()));
            }
            if val.norm() > PRUNE_THRESHOLD {
                coeffs.insert(idx.clone(), *val);
            }
        }
        Ok(Self::from_map(dim, coeffs))
    }

    fn from_map(dim: usize, coeffs: BTreeMap<MultiIndex, Complex64>) -> Self {
        let mut bandwidth = vec![0i64; dim];
        for idx in coeffs.keys() {
            for (j, &a) in idx.iter().enumerate() {
                bandwidth[j] = bandwidth[j].max(a.abs());
            }
        }
        let real_valued = check_real(&coeffs);
        Self { dim, coeffs, bandwidth, real_valued }
    }

    /// Fourier coefficients of a sampled evaluator, computed by the trapezoid
    /// rule on a uniform tensor grid. Exact for trigonometric polynomials
    /// within the requested bandwidth.
    pub fn sample_fourier<F>(evaluator: F, bandwidth: &[usize], grid: &[usize]) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let dim = bandwidth.len();
        if dim == 0 {
            return Err(Error::ZeroDim);
        }
        if grid.len() != dim {
            return Err(Error::DimMismatch(grid.len(), dim));
        }
        for (axis, (&bw, &g)) in bandwidth.iter().zip(grid).enumerate() {
            let need = 4 * bw + 4;
            if g < need {
                return Err(Error::GridTooCoarse { axis, need, got: g });
            }
        }
        let total: usize = grid.iter().product();
        let theta_of = |flat: usize| -> Vec<f64> {
            let mut rem = flat;
            let mut theta = vec![0.0; dim];
            for j in (0..dim).rev() {
                let g = grid[j];
                theta[j] = 2.0 * std::f64::consts::PI * (rem % g) as f64 / g as f64;
                rem /= g;
            }
            theta
        };
        let values = par::map_indexed(total, |flat| evaluator(&theta_of(flat)));
        for (flat, v) in values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteSample(theta_of(flat)));
            }
        }
        // enumerate the index box Π [-bw_j, bw_j]
        let mut indices: Vec<MultiIndex> = vec![vec![]];
        for &bw in bandwidth {
            let mut next = Vec::with_capacity(indices.len() * (2 * bw + 1));
            for base in &indices {
                for a in -(bw as i64)..=(bw as i64) {
                    let mut idx = base.clone();
                    idx.push(a);
                    next.push(idx);
                }
            }
            indices = next;
        }
        let weight = 1.0 / total as f64;
        let computed = par::map_indexed(indices.len(), |k| {
            let alpha = &indices[k];
            let mut acc = Complex64::new(0.0, 0.0);
            for (flat, v) in values.iter().enumerate() {
                let theta = theta_of(flat);
                let phase: f64 = alpha.iter().zip(&theta).map(|(&a, &t)| a as f64 * t).sum();
                acc += v * Complex64::from_polar(1.0, -phase);
            }
            acc * weight
        });
        let mut coeffs = BTreeMap::new();
        for (alpha, c) in indices.into_iter().zip(computed) {
            if c.norm() > PRUNE_THRESHOLD {
                coeffs.insert(alpha, c);
            }
        }
        Ok(Self::from_map(dim, coeffs))
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_map(dim, BTreeMap::new())
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        let mut coeffs = BTreeMap::new();
        if value.abs() > PRUNE_THRESHOLD {
            coeffs.insert(vec![0; dim], Complex64::new(value, 0.0));
        }
        Self::from_map(dim, coeffs)
    }

    /// The standard symbol f(θ) = 2cosθ of the nearest-neighbor hopping model.
    pub fn two_cos() -> Self {
        Self::from_coefficients(
            &[(vec![1], Complex64::new(1.0, 0.0)), (vec![-1], Complex64::new(1.0, 0.0))],
            1,
        )
        .expect("static coefficients")
    }

    /// f(θ) = 2 Σ_j cos θ_j, the d-dimensional nearest-neighbor stencil.
    pub fn laplacian(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDim);
        }
        let mut entries = Vec::new();
        for j in 0..dim {
            for sign in [1i64, -1] {
                let mut idx = vec![0i64; dim];
                idx[j] = sign;
                entries.push((idx, Complex64::new(1.0, 0.0)));
            }
        }
        Self::from_coefficients(&entries, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.keys().all(|idx| idx.iter().all(|&a| a == 0))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Per-axis maximum |α_j| over stored coefficients.
    pub fn bandwidth(&self) -> &[i64] {
        &self.bandwidth
    }

    pub fn max_bandwidth(&self) -> i64 {
        self.bandwidth.iter().copied().max().unwrap_or(0)
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&MultiIndex, &Complex64)> {
        self.coeffs.iter()
    }

    pub fn coefficient_count(&self) -> usize {
        self.coeffs.len()
    }

    /// ĉ_α, zero if absent.
    pub fn coeff(&self, alpha: &[i64]) -> Complex64 {
        self.coeffs.get(alpha).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Convenience for d = 1.
    pub fn coeff1(&self, alpha: i64) -> Complex64 {
        self.coeff(&[alpha])
    }

    /// Finite Fourier sum Σ ĉ_α e^{iα·θ}.
    pub fn eval(&self, theta: &[f64]) -> Complex64 {
        debug_assert_eq!(theta.len(), self.dim);
        let mut acc = Complex64::new(0.0, 0.0);
        for (alpha, c) in &self.coeffs {
            let phase: f64 = alpha.iter().zip(theta).map(|(&a, &t)| a as f64 * t).sum();
            acc += c * Complex64::from_polar(1.0, phase);
        }
        acc
    }

    /// Real part of the evaluation; meaningful for real-valued symbols.
    pub fn eval_real(&self, theta: &[f64]) -> f64 {
        self.eval(theta).re
    }

    /// Term-by-term derivative along one axis: ĉ_α ↦ iα_axis ĉ_α.
    pub fn derivative(&self, axis: usize) -> Result<Self> {
        if axis >= self.dim {
            return Err(Error::AxisOutOfRange { axis, dim: self.dim });
        }
        let mut coeffs = BTreeMap::new();
        for (alpha, c) in &self.coeffs {
            let factor = Complex64::new(0.0, alpha[axis] as f64);
            let v = c * factor;
            if v.norm() > PRUNE_THRESHOLD {
                coeffs.insert(alpha.clone(), v);
            }
        }
        Ok(Self::from_map(self.dim, coeffs))
    }

    /// Coefficient convolution; bandwidths add.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(self.dim, other.dim));
        }
        let mut coeffs: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let idx: MultiIndex = a.iter().zip(b).map(|(&x, &y)| x + y).collect();
                *coeffs.entry(idx).or_insert(Complex64::new(0.0, 0.0)) += ca * cb;
            }
        }
        coeffs.retain(|_, v| v.norm() > PRUNE_THRESHOLD);
        Ok(Self::from_map(self.dim, coeffs))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(self.dim, other.dim));
        }
        let mut coeffs = self.coeffs.clone();
        for (idx, c) in &other.coeffs {
            *coeffs.entry(idx.clone()).or_insert(Complex64::new(0.0, 0.0)) += c;
        }
        coeffs.retain(|_, v| v.norm() > PRUNE_THRESHOLD);
        Ok(Self::from_map(self.dim, coeffs))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut coeffs = BTreeMap::new();
        for (idx, c) in &self.coeffs {
            let v = c * factor;
            if v.norm() > PRUNE_THRESHOLD {
                coeffs.insert(idx.clone(), v);
            }
        }
        Self::from_map(self.dim, coeffs)
    }

    /// Symbol of the complex conjugate function: ĉ_α ↦ conj(ĉ_{-α}).
    pub fn conj(&self) -> Self {
        let mut coeffs = BTreeMap::new();
        for (idx, c) in &self.coeffs {
            let neg: MultiIndex = idx.iter().map(|&a| -a).collect();
            coeffs.insert(neg, c.conj());
        }
        Self::from_map(self.dim, coeffs)
    }

    /// |∇f|² = Σ_j (∂_j f)², assembled coefficient-wise.
    pub fn grad_norm_squared(&self) -> Result<Self> {
        let mut acc = Self::zero(self.dim);
        for axis in 0..self.dim {
            let d = self.derivative(axis)?;
            acc = acc.add(&d.multiply(&d)?)?;
        }
        Ok(acc)
    }

    /// min/max of Re f over a uniform tensor grid with `per_axis` points.
    pub fn range_on_grid(&self, per_axis: usize) -> (f64, f64) {
        let grid = TorusGrid::new(self.dim, per_axis);
        let (lo, hi) = par::reduce_indexed(
            grid.total(),
            (f64::INFINITY, f64::NEG_INFINITY),
            |flat| {
                let v = self.eval_real(&grid.theta(flat));
                (v, v)
            },
            |(alo, ahi), (blo, bhi)| (alo.min(blo), ahi.max(bhi)),
        );
        (lo, hi)
    }

    /// max |f| over a uniform tensor grid.
    pub fn max_abs_on_grid(&self, per_axis: usize) -> f64 {
        let grid = TorusGrid::new(self.dim, per_axis);
        par::reduce_indexed(
            grid.total(),
            0.0_f64,
            |flat| self.eval(&grid.theta(flat)).norm(),
            f64::max,
        )
    }

    /// Largest deviation |Σ ĉ_α e^{iαθ} - evaluator(θ)| over a diagnostic grid.
    pub fn max_deviation<F>(&self, evaluator: F, per_axis: usize) -> f64
    where
        F: Fn(&[f64]) -> Complex64 + Sync,
    {
        let grid = TorusGrid::new(self.dim, per_axis);
        par::reduce_indexed(
            grid.total(),
            0.0_f64,
            |flat| {
                let theta = grid.theta(flat);
                (self.eval(&theta) - evaluator(&theta)).norm()
            },
            f64::max,
        )
    }

    /// Worst conjugate-symmetry defect max_α |ĉ_{-α} - conj(ĉ_α)|.
    pub fn realness_defect(&self) -> f64 {
        realness_defect(&self.coeffs)
    }
}

fn realness_defect(coeffs: &BTreeMap<MultiIndex, Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for (alpha, c) in coeffs {
        let neg: MultiIndex = alpha.iter().map(|&a| -a).collect();
        let mirrored = coeffs.get(&neg).copied().unwrap_or(Complex64::new(0.0, 0.0));
        worst = worst.max((mirrored - c.conj()).norm());
    }
    worst
}

fn check_real(coeffs: &BTreeMap<MultiIndex, Complex64>) -> bool {
    realness_defect(coeffs) <= REALNESS_TOL
}

/// Uniform tensor grid on T^d with row-major flattening.
#[derive(Debug, Clone, Copy)]
pub struct TorusGrid {
    pub dim: usize,
    pub per_axis: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, per_axis: usize) -> Self {
        assert!(dim >= 1 && per_axis >= 2);
        Self { dim, per_axis }
    }

    pub fn total(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.per_axis as f64
    }

    pub fn theta(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut theta = vec![0.0; self.dim];
        for j in (0..self.dim).rev() {
            theta[j] = self.spacing() * (rem % self.per_axis) as f64;
            rem /= self.per_axis;
        }
        theta
    }

    /// Flat index of the neighbor one step along `axis`, wrapping around.
    pub fn neighbor(&self, flat: usize, axis: usize) -> usize {
        let stride = self.per_axis.pow((self.dim - 1 - axis) as u32);
        let coord = (flat / stride) % self.per_axis;
        if coord + 1 == self.per_axis {
            flat + stride - stride * self.per_axis
        } else {
            flat + stride
        }
    }
}

/// Torus distance max_j dist(θ_j, φ_j) with wrap-around on each axis.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = (x - y).rem_euclid(tau);
            d.min(tau - d)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests;
