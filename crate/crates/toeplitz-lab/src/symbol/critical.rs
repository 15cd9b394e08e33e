//! Critical points of real-valued symbols: zeros of the gradient, located by
//! sign-change bisection in one dimension and damped Newton refinement in
//! higher dimensions, with a per-cell exhaustiveness certificate.

use super::{torus_distance, Symbol, TorusGrid};
use crate::error::{Error, Result};

/// Zeros of ∇f on the torus, with the grid resolution that seeded them.
#[derive(Debug, Clone)]
pub struct CriticalSet {
    pub points: Vec<Vec<f64>>,
    /// Degeneracy flag per point: second derivative (d=1) or Hessian
    /// determinant (d≥2) vanishing at the point.
    pub degenerate: Vec<bool>,
    pub resolution: f64,
    pub tol: f64,
    /// True when every grid cell was either certified free of zeros or
    /// produced a refined point.
    pub is_exhaustive: bool,
}

impl Symbol {
    /// Locate the zeros of ∇f. Rejects non-real and constant symbols.
    pub fn critical_set(&self, initial_grid: usize, tol: f64) -> Result<CriticalSet> {
        if !self.is_real_valued() {
            return Err(Error::NotRealValued);
        }
        if self.is_constant() {
            return Err(Error::ConstantSymbol);
        }
        if self.dim == 1 {
            self.critical_set_1d(initial_grid, tol)
        } else {
            self.critical_set_nd(initial_grid, tol)
        }
    }

    fn critical_set_1d(&self, initial_grid: usize, tol: f64) -> Result<CriticalSet> {
        let g = self.derivative(0)?;
        let g2 = g.derivative(0)?;
        let grid = TorusGrid::new(1, initial_grid);
        let h = grid.spacing();
        let vals: Vec<f64> = (0..initial_grid).map(|j| g.eval_real(&[h * j as f64])).collect();
        // Lipschitz bound for g on a cell, from max |g'| on the grid.
        let lip = g2.max_abs_on_grid(initial_grid.max(256)) * 1.05 + 1e-300;

        let mut roots: Vec<f64> = Vec::new();
        let mut exhaustive = true;
        for j in 0..initial_grid {
            let a = h * j as f64;
            let b = a + h;
            let (ga, gb) = (vals[j], vals[(j + 1) % initial_grid]);
            if ga == 0.0 {
                roots.push(a);
                continue;
            }
            if ga * gb < 0.0 {
                roots.push(bisect(|t| g.eval_real(&[t]), a, b));
                continue;
            }
            // no sign change: certify the cell or hunt for a tangential zero
            if ga.abs().min(gb.abs()) > lip * h {
                continue;
            }
            match newton_1d(&g, &g2, 0.5 * (a + b), tol) {
                Some(t) if t >= a - h && t <= b + h => roots.push(t),
                _ => {
                    // could not classify this cell
                    exhaustive = false;
                }
            }
        }

        let tau = 2.0 * std::f64::consts::PI;
        let mut points: Vec<Vec<f64>> = Vec::new();
        for r in roots {
            let r = r.rem_euclid(tau);
            if points.iter().all(|p| torus_distance(p, &[r]) > h / 2.0) {
                points.push(vec![r]);
            }
        }
        points.retain(|p| g.eval_real(p).abs() <= tol);
        points.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let deg_scale = g2.max_abs_on_grid(initial_grid).max(1e-12);
        let degenerate =
            points.iter().map(|p| g2.eval_real(p).abs() <= 1e-6 * deg_scale).collect();
        Ok(CriticalSet { points, degenerate, resolution: h, tol, is_exhaustive: exhaustive })
    }

    fn critical_set_nd(&self, initial_grid: usize, tol: f64) -> Result<CriticalSet> {
        let d = self.dim;
        let grads: Vec<Symbol> = (0..d).map(|j| self.derivative(j)).collect::<Result<_>>()?;
        let mut hess = Vec::with_capacity(d * d);
        for gj in &grads {
            for k in 0..d {
                hess.push(gj.derivative(k)?);
            }
        }
        let grid = TorusGrid::new(d, initial_grid);
        let h = grid.spacing();
        let total = grid.total();
        let grad_mag = |theta: &[f64]| -> f64 {
            grads.iter().map(|g| g.eval_real(theta).powi(2)).sum::<f64>().sqrt()
        };
        let vals: Vec<f64> = crate::par::map_indexed(total, |flat| grad_mag(&grid.theta(flat)));

        // Hessian-based Lipschitz bound for |∇f| over one cell diagonal.
        let mut hess_bound = 0.0f64;
        for hjk in &hess {
            hess_bound += hjk.max_abs_on_grid(64).powi(2);
        }
        let lip = hess_bound.sqrt() * 1.05 + 1e-300;
        let cell_diag = h * (d as f64).sqrt();

        let mut found: Vec<Vec<f64>> = Vec::new();
        let mut exhaustive = true;
        for flat in 0..total {
            // corners of the cell anchored at this vertex
            let mut corner_min = vals[flat];
            let mut corners = vec![flat];
            for axis in 0..d {
                let mut next = Vec::with_capacity(corners.len() * 2);
                for &c in &corners {
                    next.push(c);
                    next.push(grid.neighbor(c, axis));
                }
                corners = next;
            }
            for &c in &corners {
                corner_min = corner_min.min(vals[c]);
            }
            if corner_min > lip * cell_diag {
                continue; // certified: no zero of ∇f inside
            }
            let mut center = grid.theta(flat);
            for t in center.iter_mut() {
                *t += 0.5 * h;
            }
            match newton_nd(&grads, &hess, d, &center, tol) {
                Some(p) => found.push(p),
                None => exhaustive = false,
            }
        }

        let tau = 2.0 * std::f64::consts::PI;
        let mut points: Vec<Vec<f64>> = Vec::new();
        for mut p in found {
            for c in p.iter_mut() {
                *c = c.rem_euclid(tau);
                // snap values that are numerically 2π back to 0
                if (tau - *c).abs() < 1e-9 {
                    *c = 0.0;
                }
            }
            if grad_mag(&p) <= tol && points.iter().all(|q| torus_distance(q, &p) > h / 2.0) {
                points.push(p);
            }
        }
        points.sort_by(|a, b| {
            a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
        let deg_scale = hess.iter().map(|s| s.max_abs_on_grid(64)).fold(0.0, f64::max).max(1e-12);
        let degenerate = points
            .iter()
            .map(|p| {
                let m = nalgebra::DMatrix::from_fn(d, d, |i, j| hess[i * d + j].eval_real(p));
                m.determinant().abs() <= 1e-6 * deg_scale.powi(d as i32)
            })
            .collect();
        Ok(CriticalSet { points, degenerate, resolution: h, tol, is_exhaustive: exhaustive })
    }

    /// f evaluated at each critical point, deduplicated at 1e-9, ascending.
    pub fn thresholds(&self, critical: &CriticalSet) -> Vec<f64> {
        let mut vals: Vec<f64> = critical.points.iter().map(|p| self.eval_real(p)).collect();
        vals.sort_by(f64::total_cmp);
        let mut out: Vec<f64> = Vec::new();
        let mut cluster: Vec<f64> = Vec::new();
        for v in vals {
            if let Some(&last) = cluster.last() {
                if v - last > 1e-9 {
                    out.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
                    cluster.clear();
                }
            }
            cluster.push(v);
        }
        if !cluster.is_empty() {
            out.push(cluster.iter().sum::<f64>() / cluster.len() as f64);
        }
        out
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a < 1e-15 * (1.0 + m.abs()) {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

fn newton_1d(g: &Symbol, g2: &Symbol, start: f64, tol: f64) -> Option<f64> {
    let mut t = start;
    for _ in 0..100 {
        let gv = g.eval_real(&[t]);
        if gv.abs() <= tol * 1e-3 {
            return Some(t);
        }
        let dv = g2.eval_real(&[t]);
        if dv.abs() < 1e-14 {
            return None;
        }
        let step = gv / dv;
        t -= step;
        if step.abs() < 1e-15 {
            return Some(t);
        }
    }
    let gv = g.eval_real(&[t]);
    (gv.abs() <= tol).then_some(t)
}

fn newton_nd(
    grads: &[Symbol],
    hess: &[Symbol],
    d: usize,
    start: &[f64],
    tol: f64,
) -> Option<Vec<f64>> {
    let mut x = start.to_vec();
    let grad_at = |x: &[f64]| nalgebra::DVector::from_fn(d, |j, _| grads[j].eval_real(x));
    let mut gv = grad_at(&x);
    for _ in 0..100 {
        if gv.norm() <= tol * 1e-3 {
            return Some(x);
        }
        let m = nalgebra::DMatrix::from_fn(d, d, |i, j| hess[i * d + j].eval_real(&x));
        let step = m.lu().solve(&gv)?;
        // damped update: halve until the gradient norm decreases
        let mut lambda = 1.0;
        loop {
            let cand: Vec<f64> =
                x.iter().zip(step.iter()).map(|(&xi, &si)| xi - lambda * si).collect();
            let gc = grad_at(&cand);
            if gc.norm() < gv.norm() || lambda < 1e-4 {
                x = cand;
                gv = gc;
                break;
            }
            lambda *= 0.5;
        }
        if lambda < 1e-4 {
            break;
        }
    }
    (gv.norm() <= tol).then_some(x)
}
