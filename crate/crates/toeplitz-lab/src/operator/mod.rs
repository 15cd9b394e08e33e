//! Truncated operator matrices: Toeplitz and Hankel compressions on the
//! half-line, Laurent convolutions on lattice boxes, position and conjugate
//! operators, plus the bracket algebra connecting them.

mod identity;
mod io;

pub use identity::{
    commutator_formula_defect, commutator_formula_rhs, compressed_ad_conjugate,
    holder_bound_check, sarason_defect, singular_decay, DefectReport,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;
use crate::symbol::Symbol;

/// Underlying index space of a truncated operator.
///
/// Half-line matrices act on sites 1..=n (matrix index i ↔ site i+1); a
/// lattice box covers α ∈ {-radius..radius}^dim in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    HalfLine { n: usize },
    LatticeBox { dim: usize, radius: usize },
}

impl Space {
    pub fn matrix_dim(&self) -> usize {
        match *self {
            Space::HalfLine { n } => n,
            Space::LatticeBox { dim, radius } => (2 * radius + 1).pow(dim as u32),
        }
    }

    pub fn dim(&self) -> usize {
        match *self {
            Space::HalfLine { .. } => 1,
            Space::LatticeBox { dim, .. } => dim,
        }
    }

    /// Coordinate of a basis site along `axis`: n for the half-line,
    /// α_axis ∈ [-radius, radius] on the lattice.
    pub fn coordinate(&self, index: usize, axis: usize) -> i64 {
        match *self {
            Space::HalfLine { .. } => {
                debug_assert_eq!(axis, 0);
                index as i64 + 1
            }
            Space::LatticeBox { dim, radius } => {
                let side = 2 * radius + 1;
                let stride = side.pow((dim - 1 - axis) as u32);
                ((index / stride) % side) as i64 - radius as i64
            }
        }
    }

    /// Full multi-index of a basis site.
    pub fn site(&self, index: usize) -> Vec<i64> {
        (0..self.dim()).map(|axis| self.coordinate(index, axis)).collect()
    }

    /// Flat index of a lattice site; `None` outside the box.
    pub fn flat(&self, site: &[i64]) -> Option<usize> {
        match *self {
            Space::HalfLine { n } => {
                let s = site[0];
                (s >= 1 && s <= n as i64).then(|| (s - 1) as usize)
            }
            Space::LatticeBox { dim, radius } => {
                let side = 2 * radius + 1;
                let mut flat = 0usize;
                for (j, &a) in site.iter().enumerate() {
                    debug_assert!(j < dim);
                    if a.unsigned_abs() as usize > radius {
                        return None;
                    }
                    flat = flat * side + (a + radius as i64) as usize;
                }
                Some(flat)
            }
        }
    }
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            Space::HalfLine { n } => write!(f, "half-line({n})"),
            Space::LatticeBox { dim, radius } => write!(f, "lattice-box({dim}, {radius})"),
        }
    }
}

/// Boundary handling for lattice convolution matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Sharp box: the convolution window is zero-filled outside.
    Truncate,
    /// Indices wrap modulo the box side (circulant).
    Periodic,
}

/// Dense complex matrix with its index space and provenance label.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub space: Space,
    pub data: DMatrix<Complex64>,
    pub hermitian: bool,
    pub label: String,
}

impl OperatorMatrix {
    /// Wrap dense data; the hermitian flag is set from the entries.
    pub fn from_data(space: Space, data: DMatrix<Complex64>, label: impl Into<String>) -> Self {
        let dim = space.matrix_dim();
        assert_eq!(data.nrows(), dim, "matrix size does not match the space");
        assert_eq!(data.ncols(), dim);
        let hermitian = hermiticity_defect(&data) < 1e-13 * max_abs(&data).max(1e-300);
        Self { space, data, hermitian, label: label.into() }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.data)
    }

    pub fn apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.data * v
    }

    /// Entrywise sum on a shared space.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(self.space.to_string(), other.space.to_string()));
        }
        Ok(Self::from_data(
            self.space,
            &self.data + &other.data,
            format!("{} + {}", self.label, other.label),
        ))
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_data(self.space, self.data.map(|z| z * factor), self.label.clone())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_data(self.space, self.data.adjoint(), format!("{}^*", self.label))
    }

    /// Matrix product (same space).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(self.space.to_string(), other.space.to_string()));
        }
        Ok(Self::from_data(
            self.space,
            &self.data * &other.data,
            format!("{} {}", self.label, other.label),
        ))
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Toeplitz compression: entry (n, k) = f̂_{n-k} on sites 1..=n.
pub fn toeplitz_matrix(f: &Symbol, n: usize) -> Result<OperatorMatrix> {
    if f.dim() != 1 {
        return Err(Error::NotOneDim(f.dim()));
    }
    if n == 0 {
        return Err(Error::EmptyTruncation);
    }
    let rows = par::map_indexed(n, |i| {
        (0..n).map(|j| f.coeff1(i as i64 - j as i64)).collect::<Vec<_>>()
    });
    let data = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(OperatorMatrix::from_data(Space::HalfLine { n }, data, "T_f"))
}

/// Hankel cross-block: entry (n, k) = f̂_{n+k-1}.
pub fn hankel_matrix(f: &Symbol, n: usize) -> Result<OperatorMatrix> {
    if f.dim() != 1 {
        return Err(Error::NotOneDim(f.dim()));
    }
    if n == 0 {
        return Err(Error::EmptyTruncation);
    }
    let data = DMatrix::from_fn(n, n, |i, j| f.coeff1(i as i64 + j as i64 + 1));
    Ok(OperatorMatrix::from_data(Space::HalfLine { n }, data, "H_f"))
}

/// Laurent convolution matrix on the box {-radius..radius}^d.
pub fn laurent_matrix(f: &Symbol, radius: usize, boundary: Boundary) -> Result<OperatorMatrix> {
    let dim = f.dim();
    let space = Space::LatticeBox { dim, radius };
    let side = 2 * radius + 1;
    if boundary == Boundary::Periodic {
        for &bw in f.bandwidth() {
            if side <= 2 * bw as usize + 1 {
                return Err(Error::BoxTooSmall { side, bandwidth: bw as usize });
            }
        }
    }
    let m = space.matrix_dim();
    let rows = par::map_indexed(m, |i| {
        let beta = space.site(i);
        (0..m)
            .map(|j| {
                let gamma = space.site(j);
                let mut delta: Vec<i64> = beta.iter().zip(&gamma).map(|(&b, &g)| b - g).collect();
                if boundary == Boundary::Periodic {
                    for d in delta.iter_mut() {
                        *d = d.rem_euclid(side as i64);
                        if *d > radius as i64 {
                            *d -= side as i64;
                        }
                    }
                }
                f.coeff(&delta)
            })
            .collect::<Vec<_>>()
    });
    let data = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
    Ok(OperatorMatrix::from_data(space, data, "L_f"))
}

/// Diagonal position operator along one axis.
pub fn position_matrix(space: Space, axis: usize) -> Result<OperatorMatrix> {
    if axis >= space.dim() {
        return Err(Error::AxisOutOfRange { axis, dim: space.dim() });
    }
    let m = space.matrix_dim();
    let data = DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            Complex64::new(space.coordinate(i, axis) as f64, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let label = match space {
        Space::HalfLine { .. } => "X".to_string(),
        Space::LatticeBox { .. } => format!("X_{}", axis + 1),
    };
    Ok(OperatorMatrix::from_data(space, data, label))
}

/// Symmetrized product A_g = (T_g X + X T_g)/2 on the half-line.
///
/// Entries close in terms of the coefficients, (n, k) = ĝ_{n-k}(n + k)/2,
/// so the matrix is exactly Hermitian for conjugate-symmetric ĝ.
pub fn conjugate_operator_halfline(g: &Symbol, n: usize) -> Result<OperatorMatrix> {
    if g.dim() != 1 {
        return Err(Error::NotOneDim(g.dim()));
    }
    if !g.is_real_valued() {
        return Err(Error::NotRealValued);
    }
    let data = DMatrix::from_fn(n, n, |i, j| {
        g.coeff1(i as i64 - j as i64) * Complex64::new((i + j + 2) as f64 / 2.0, 0.0)
    });
    Ok(OperatorMatrix::from_data(Space::HalfLine { n }, data, "A_g"))
}

/// Lattice conjugate operator (Σ_j L_{g_j} X_j + X_j L_{g_j})/2 for a family
/// of per-axis real symbols, in truncate mode.
pub fn conjugate_operator_lattice(gs: &[Symbol], radius: usize) -> Result<OperatorMatrix> {
    let dim = gs.len();
    if dim == 0 {
        return Err(Error::ZeroDim);
    }
    for g in gs {
        if g.dim() != dim {
            return Err(Error::DimMismatch(g.dim(), dim));
        }
        if !g.is_real_valued() {
            return Err(Error::NotRealValued);
        }
    }
    let space = Space::LatticeBox { dim, radius };
    let m = space.matrix_dim();
    let rows = par::map_indexed(m, |i| {
        let beta = space.site(i);
        (0..m)
            .map(|j| {
                let gamma = space.site(j);
                let delta: Vec<i64> = beta.iter().zip(&gamma).map(|(&b, &g)| b - g).collect();
                let mut acc = Complex64::new(0.0, 0.0);
                for (axis, g) in gs.iter().enumerate() {
                    let w = (beta[axis] + gamma[axis]) as f64 / 2.0;
                    acc += g.coeff(&delta) * Complex64::new(w, 0.0);
                }
                acc
            })
            .collect::<Vec<_>>()
    });
    let data = DMatrix::from_fn(m, m, |i, j| rows[i][j]);
    Ok(OperatorMatrix::from_data(space, data, "A_grad"))
}

/// Conjugate operator built from the gradient of `f` on its natural space.
pub fn conjugate_operator_for(f: &Symbol, space: Space) -> Result<OperatorMatrix> {
    match space {
        Space::HalfLine { n } => conjugate_operator_halfline(&f.derivative(0)?, n),
        Space::LatticeBox { dim, radius } => {
            let gs: Vec<Symbol> = (0..dim).map(|j| f.derivative(j)).collect::<Result<_>>()?;
            conjugate_operator_lattice(&gs, radius)
        }
    }
}

/// Finite-matrix bracket AB - BA.
pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    if a.space != b.space {
        return Err(Error::SpaceMismatch(a.space.to_string(), b.space.to_string()));
    }
    let data = &a.data * &b.data - &b.data * &a.data;
    Ok(OperatorMatrix::from_data(a.space, data, format!("[{}, {}]", a.label, b.label)))
}

/// i[A, B]; Hermitian whenever A and B are.
pub fn commutator_i(a: &OperatorMatrix, b: &OperatorMatrix) -> Result<OperatorMatrix> {
    let c = commutator(a, b)?;
    Ok(OperatorMatrix::from_data(
        c.space,
        c.data.map(|z| Complex64::new(0.0, 1.0) * z),
        format!("i[{}, {}]", a.label, b.label),
    ))
}

/// Sparse convolution apply (T_f v) on the half-line: O(n · #coeffs).
pub fn apply_symbol_halfline(f: &Symbol, v: &DVector<Complex64>) -> DVector<Complex64> {
    let n = v.len();
    let mut out = DVector::from_element(n, Complex64::new(0.0, 0.0));
    for (alpha, c) in f.coefficients() {
        let d = alpha[0];
        // out_i += c * v_{i - d}, both indices within 0..n
        let lo = d.max(0) as usize;
        let hi = (n as i64 + d.min(0)).max(0) as usize;
        for i in lo..hi {
            out[i] += c * v[(i as i64 - d) as usize];
        }
    }
    out
}

/// Sparse convolution apply on a lattice box, truncate boundary.
pub fn apply_symbol_lattice(
    f: &Symbol,
    radius: usize,
    v: &DVector<Complex64>,
) -> DVector<Complex64> {
    let space = Space::LatticeBox { dim: f.dim(), radius };
    let m = space.matrix_dim();
    debug_assert_eq!(v.len(), m);
    let mut out = DVector::from_element(m, Complex64::new(0.0, 0.0));
    for (alpha, c) in f.coefficients() {
        for i in 0..m {
            let beta = space.site(i);
            let src: Vec<i64> = beta.iter().zip(alpha).map(|(&b, &a)| b - a).collect();
            if let Some(j) = space.flat(&src) {
                out[i] += c * v[j];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
