//! Extraction of the Gegenbauer coefficients `B_k(h)` of a kernel and reconstruction from them.
//!
//! `B_k(h)` is the double projection of `K(., ., h)` onto `C_{k1}^{d1}(s) C_{k2}^{d2}(r)`
//! against the weights `(1 - t^2)^{d_i/2 - 1}`, divided by the numerically computed
//! norms `N(d, k) = int C_k(t)^2 (1 - t^2)^{d/2 - 1} dt`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Dims, Invariants3};
use crate::kernels::MatrixKernel;
use crate::linalg::symmetrize;
use crate::seeding::rng_from_seed;
use crate::specfun::{gauss_jacobi_rule, GegenbauerTable, QuadratureRule};
use crate::validation::AuditReport;

/// `B_k(h)` for `k <= k_max` on a grid of `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub d1: u32,
    pub d2: u32,
    pub p: usize,
    pub k_max: (usize, usize),
    pub h_grid: Vec<f64>,
    values: Vec<DMatrix<f64>>,
}

impl CoefficientTable {
    /// All-zero table.
    pub fn zeros(d1: u32, d2: u32, p: usize, k_max: (usize, usize), h_grid: Vec<f64>) -> Result<Self> {
        if h_grid.is_empty() || h_grid.windows(2).any(|w| !(w[0] < w[1])) || !(h_grid[0] >= 0.0) {
            return Err(Error::invalid("h grid must be nonempty, nonnegative and strictly increasing"));
        }
        let n = (k_max.0 + 1) * (k_max.1 + 1) * h_grid.len();
        Ok(CoefficientTable {
            d1,
            d2,
            p,
            k_max,
            h_grid,
            values: vec![DMatrix::zeros(p, p); n],
        })
    }

    fn index(&self, k1: usize, k2: usize, hi: usize) -> usize {
        (k1 * (self.k_max.1 + 1) + k2) * self.h_grid.len() + hi
    }

    fn check(&self, k1: usize, k2: usize, hi: usize) -> Result<()> {
        if k1 > self.k_max.0 || k2 > self.k_max.1 || hi >= self.h_grid.len() {
            return Err(Error::invalid(format!(
                "index ({k1}, {k2}, {hi}) outside table bounds {:?} x {}",
                self.k_max,
                self.h_grid.len()
            )));
        }
        Ok(())
    }

    pub fn get(&self, k1: usize, k2: usize, hi: usize) -> Result<&DMatrix<f64>> {
        self.check(k1, k2, hi)?;
        Ok(&self.values[self.index(k1, k2, hi)])
    }

    /// Stores a coefficient; it must be `p x p` and symmetric within `1e-10`.
    pub fn set(&mut self, k1: usize, k2: usize, hi: usize, m: DMatrix<f64>) -> Result<()> {
        self.check(k1, k2, hi)?;
        if m.shape() != (self.p, self.p) {
            return Err(Error::dims(format!("coefficient is {:?}, expected {0}x{0}", self.p)));
        }
        if crate::linalg::asymmetry(&m) > 1e-10 * m.amax().max(1.0) {
            return Err(Error::invalid("coefficient matrix is not symmetric"));
        }
        let idx = self.index(k1, k2, hi);
        self.values[idx] = m;
        Ok(())
    }

    /// Grid position of `h`: an exact grid index or a bracketing pair with weight.
    fn locate(&self, h: f64) -> Result<(usize, usize, f64)> {
        let g = &self.h_grid;
        let tol = 1e-12 * h.abs().max(1.0);
        if let Some(i) = g.iter().position(|&x| (x - h).abs() <= tol) {
            return Ok((i, i, 0.0));
        }
        if h < g[0] || h > g[g.len() - 1] {
            return Err(Error::domain(
                "reconstruct",
                format!("h = {h} outside the table range [{}, {}]", g[0], g[g.len() - 1]),
            ));
        }
        let hi = g.partition_point(|&x| x < h);
        let lo = hi - 1;
        Ok((lo, hi, (h - g[lo]) / (g[hi] - g[lo])))
    }

    /// `B_k(h)`, linearly interpolated between grid points; the flag reports interpolation.
    pub fn coefficient_at(&self, k1: usize, k2: usize, h: f64) -> Result<(DMatrix<f64>, bool)> {
        let (lo, hi, t) = self.locate(h)?;
        let a = self.get(k1, k2, lo)?;
        if lo == hi {
            return Ok((a.clone(), false));
        }
        let b = self.get(k1, k2, hi)?;
        Ok((a * (1.0 - t) + b * t, true))
    }

    /// Largest absolute entry over the table.
    pub fn scale(&self) -> f64 {
        self.values.iter().map(|m| m.amax()).fold(0.0, f64::max)
    }
}

fn rule_for(d: u32, quad_order: usize) -> Result<QuadratureRule> {
    gauss_jacobi_rule(quad_order, d as f64 / 2.0 - 1.0)
}

/// `C_k^d` at every node (rows) for `k <= k_max` (columns), and the norms `N(d, k)`.
fn basis(d: u32, k_max: usize, rule: &QuadratureRule) -> (Vec<Vec<f64>>, Vec<f64>) {
    let vals: Vec<Vec<f64>> = rule
        .nodes
        .iter()
        .map(|&t| GegenbauerTable::new(d, k_max, t).as_slice().to_vec())
        .collect();
    let norms = (0..=k_max)
        .map(|k| rule.weights.iter().zip(&vals).map(|(w, c)| w * c[k] * c[k]).sum())
        .collect();
    (vals, norms)
}

/// Projects `kernel` onto `C_{k1}(s) C_{k2}(r)` for every `k <= k_max` and every `h` in `h_grid`.
pub fn extract<K: MatrixKernel + ?Sized>(
    kernel: &K,
    k_max: (usize, usize),
    h_grid: &[f64],
    quad_order: usize,
) -> Result<CoefficientTable> {
    let need = k_max.0.max(k_max.1) + 4;
    if quad_order < need {
        return Err(Error::invalid(format!(
            "quadrature order {quad_order} too small for degrees {k_max:?} (need >= {need})"
        )));
    }
    let Dims { d1, d2, .. } = kernel.dims();
    let p = kernel.p();
    let mut table = CoefficientTable::zeros(d1, d2, p, k_max, h_grid.to_vec())?;
    let (rule1, rule2) = (rule_for(d1, quad_order)?, rule_for(d2, quad_order)?);
    let (c1, n1) = basis(d1, k_max.0, &rule1);
    let (c2, n2) = basis(d2, k_max.1, &rule2);

    let per_h: Vec<Vec<DMatrix<f64>>> = h_grid
        .par_iter()
        .map(|&h| {
            let mut acc = vec![DMatrix::<f64>::zeros(p, p); (k_max.0 + 1) * (k_max.1 + 1)];
            for (a, (&s, &w1)) in rule1.nodes.iter().zip(&rule1.weights).enumerate() {
                for (b, (&r, &w2)) in rule2.nodes.iter().zip(&rule2.weights).enumerate() {
                    let kv = kernel.eval(&Invariants3::new(s, r, h))?;
                    for k1 in 0..=k_max.0 {
                        let f1 = w1 * c1[a][k1];
                        for k2 in 0..=k_max.1 {
                            acc[k1 * (k_max.1 + 1) + k2] += &kv * (f1 * w2 * c2[b][k2]);
                        }
                    }
                }
            }
            for k1 in 0..=k_max.0 {
                for k2 in 0..=k_max.1 {
                    let m = &mut acc[k1 * (k_max.1 + 1) + k2];
                    *m /= n1[k1] * n2[k2];
                    symmetrize(m);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;

    for (hi, cells) in per_h.into_iter().enumerate() {
        for (idx, m) in cells.into_iter().enumerate() {
            table.set(idx / (k_max.1 + 1), idx % (k_max.1 + 1), hi, m)?;
        }
    }
    Ok(table)
}

/// Truncated expansion `sum_{k <= k_max} B_k(h) C_{k1}(s) C_{k2}(r)`; the flag reports
/// whether `h` fell between grid points and was interpolated.
pub fn reconstruct(table: &CoefficientTable, inv: &Invariants3) -> Result<(DMatrix<f64>, bool)> {
    let (lo, hi, t) = table.locate(inv.h)?;
    let cs = GegenbauerTable::new(table.d1, table.k_max.0, inv.s);
    let cr = GegenbauerTable::new(table.d2, table.k_max.1, inv.r);
    let mut out = DMatrix::zeros(table.p, table.p);
    for k1 in 0..=table.k_max.0 {
        for k2 in 0..=table.k_max.1 {
            let w = cs.get(k1) * cr.get(k2);
            out += table.get(k1, k2, lo)? * (w * (1.0 - t));
            if hi != lo {
                out += table.get(k1, k2, hi)? * (w * t);
            }
        }
    }
    Ok((out, lo != hi))
}

/// Per-degree result of the Schoenberg audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeAudit {
    pub k1: usize,
    pub k2: usize,
    pub min_eig_ratio: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchoenbergReport {
    pub degrees: Vec<DegreeAudit>,
    /// `max_{k1 + k2 = n} |B_k(0)|` (largest absolute entry) for `n = 0, 1, ...`.
    pub tail: Vec<f64>,
    /// Whether the tail is nonincreasing (up to the noise floor).
    pub tail_decreasing: bool,
    /// Whether distances had to be interpolated between grid points.
    pub interpolated: bool,
    pub audit: AuditReport,
}

/// Relative size below which coefficients are treated as numerically zero.
pub const NOISE_FLOOR: f64 = 1e-10;
pub const SCHOENBERG_TOL: f64 = 1e-6;

/// Treats each `h -> B_k(h)` as a candidate positive definite function on `R^d` and
/// eigen-audits its Gram matrix over `n_points` Euclidean points.
///
/// When the grid is uniform and starts at 0, the points form a lattice on a line so every
/// pairwise distance lies on the grid; otherwise random points in a ball of radius
/// `h_max / 2` are used and the coefficients interpolated.
pub fn schoenberg_audit(table: &CoefficientTable, d: u32, n_points: usize, seed: u64) -> Result<SchoenbergReport> {
    if n_points == 0 || d == 0 {
        return Err(Error::invalid("schoenberg_audit needs n_points >= 1 and d >= 1"));
    }
    let g = &table.h_grid;
    let step = if g.len() > 1 { g[1] - g[0] } else { 0.0 };
    let uniform = g[0] == 0.0
        && g.len() > 1
        && g.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step);

    let points: Vec<Vec<f64>> = if uniform {
        let n = n_points.min(g.len());
        (0..n)
            .map(|m| {
                let mut u = vec![0.0; d as usize];
                u[0] = m as f64 * step;
                u
            })
            .collect()
    } else {
        use rand::Rng;
        let radius = 0.5 * g[g.len() - 1];
        let mut rng = rng_from_seed(seed);
        (0..n_points)
            .map(|_| {
                let rad: f64 = radius * rng.random::<f64>().powf(1.0 / d as f64);
                if d == 1 {
                    vec![if rng.random::<bool>() { rad } else { -rad }]
                } else {
                    let dir = crate::geometry::random_unit_vector(&mut rng, d - 1);
                    dir.coords().iter().map(|c| c * rad).collect()
                }
            })
            .collect()
    };
    let n = points.len();
    let mut dist = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in 0..n {
            let h: f64 = points[a].iter().zip(&points[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            dist[a][b] = if uniform {
                // snap to the lattice to avoid round-off leaving the grid
                g[((h / step).round() as usize).min(g.len() - 1)]
            } else {
                h.min(g[g.len() - 1])
            };
        }
    }

    let floor = NOISE_FLOOR * table.scale();
    let p = table.p;
    let cells: Vec<(usize, usize)> = (0..=table.k_max.0)
        .flat_map(|k1| (0..=table.k_max.1).map(move |k2| (k1, k2)))
        .collect();
    let mut interpolated = false;
    let mut degrees = Vec::with_capacity(cells.len());
    let mut trials = Vec::with_capacity(cells.len());
    for &(k1, k2) in &cells {
        let mut gm = DMatrix::zeros(n * p, n * p);
        for a in 0..n {
            for b in a..n {
                let (bk, interp) = table.coefficient_at(k1, k2, dist[a][b])?;
                interpolated |= interp;
                for i in 0..p {
                    for j in 0..p {
                        let v = if a == b && j < i { bk[(j, i)] } else { bk[(i, j)] };
                        gm[(a * p + i, b * p + j)] = v;
                        gm[(b * p + j, a * p + i)] = v;
                    }
                }
            }
        }
        let eigs = crate::linalg::symmetric_eigenvalues(&gm)?;
        let ratio = crate::linalg::eig_ratio(&eigs, floor);
        degrees.push(DegreeAudit {
            k1,
            k2,
            min_eig_ratio: ratio,
            passed: ratio >= -SCHOENBERG_TOL,
        });
        trials.push((None, format!("k=({k1},{k2})"), ratio));
    }
    let audit = AuditReport::from_trials("schoenberg_audit", trials, SCHOENBERG_TOL);

    let zero = table.locate(0.0).map(|(lo, _, _)| lo).unwrap_or(0);
    let mut tail = vec![0.0f64; table.k_max.0 + table.k_max.1 + 1];
    for &(k1, k2) in &cells {
        tail[k1 + k2] = tail[k1 + k2].max(table.get(k1, k2, zero)?.amax());
    }
    let tail_decreasing = tail.windows(2).all(|w| w[1] <= w[0] + floor);
    Ok(SchoenbergReport {
        degrees,
        tail,
        tail_decreasing,
        interpolated,
        audit,
    })
}

/// Uniform grid `0, step, ..., (n - 1) step`.
pub fn uniform_grid(n: usize, step: f64) -> Vec<f64> {
    (0..n).map(|i| i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ExpansionKernel, ExpansionTerm, FnKernel, RadialProfile};

    #[test]
    fn constant_kernel_projects_to_degree_zero() {
        let b0 = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let bc = b0.clone();
        let k = FnKernel::new(2, Dims::new(2, 3, 1).unwrap(), move |_| Ok(bc.clone()));
        let t = extract(&k, (3, 2), &[0.0, 1.0], 16).unwrap();
        for k1 in 0..=3 {
            for k2 in 0..=2 {
                let m = t.get(k1, k2, 1).unwrap();
                if (k1, k2) == (0, 0) {
                    assert!((m - &b0).amax() < 1e-12);
                } else {
                    assert!(m.amax() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn round_trip_band_limited() {
        let dims = Dims::new(1, 2, 1).unwrap();
        let profile = RadialProfile::Matern { alpha: 1.2, nu: 1.5 };
        let terms = vec![
            ExpansionTerm { k1: 0, k2: 0, matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 1.0]), profile },
            ExpansionTerm { k1: 2, k2: 1, matrix: DMatrix::from_row_slice(2, 2, &[0.5, -0.3, -0.3, 0.4]), profile },
        ];
        let k = ExpansionKernel::new(dims, terms, false).unwrap();
        let grid = uniform_grid(4, 0.5);
        let t = extract(&k, (3, 3), &grid, 24).unwrap();
        for (hi, &h) in grid.iter().enumerate() {
            assert!((t.get(2, 1, hi).unwrap() - k.coefficient(2, 1, h)).amax() < 1e-12);
            assert!(t.get(1, 1, hi).unwrap().amax() < 1e-12);
        }
        let inv = Invariants3::new(-0.3, 0.8, 1.0);
        let (v, interp) = reconstruct(&t, &inv).unwrap();
        assert!(!interp);
        assert!((v - k.eval(&inv).unwrap()).amax() < 1e-12);
        let (_, interp) = reconstruct(&t, &Invariants3::new(0.0, 0.0, 0.75)).unwrap();
        assert!(interp);
        assert!(reconstruct(&t, &Invariants3::new(0.0, 0.0, 2.0)).is_err());
    }

    #[test]
    fn quad_order_precondition() {
        let k = FnKernel::new(1, Dims::new(1, 1, 1).unwrap(), |_| Ok(DMatrix::identity(1, 1)));
        assert!(extract(&k, (10, 2), &[0.0], 13).is_err());
    }

    #[test]
    fn schoenberg_flags_planted_coefficient() {
        let mut t = CoefficientTable::zeros(1, 1, 2, (1, 1), uniform_grid(6, 0.4)).unwrap();
        for hi in 0..6 {
            let h = t.h_grid[hi];
            let e = (-h as f64).exp();
            t.set(0, 0, hi, DMatrix::from_row_slice(2, 2, &[e, 0.5 * e, 0.5 * e, e])).unwrap();
            t.set(1, 0, hi, DMatrix::from_row_slice(2, 2, &[-e, 0.0, 0.0, -e])).unwrap();
        }
        let r = schoenberg_audit(&t, 2, 6, 1).unwrap();
        assert!(!r.interpolated);
        let flagged: Vec<_> = r.degrees.iter().filter(|d| !d.passed).map(|d| (d.k1, d.k2)).collect();
        assert_eq!(flagged, vec![(1, 0)]);
        assert!(!r.audit.passed);
    }
}
