use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_psd, Dims, MatrixKernel};
use crate::error::{Error, Result};
use crate::geometry::Invariants3;
use crate::linalg::{matrix_from_rows, matrix_to_rows};

pub const DEFAULT_TRUNCATION: usize = 2000;

/// Matrix cross variogram `gamma_ij(r, h) = (v_i + v_j) - beta_ij exp(-a (1 - r) - b h^kappa)`.
///
/// With `beta` PSD the exponential part is positive definite, so `gamma` is
/// conditionally negative definite; `v_i + v_j > beta_ij` keeps every entry positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossVariogramSpec {
    pub v: Vec<f64>,
    #[serde(with = "rows")]
    pub beta: DMatrix<f64>,
    pub a: f64,
    pub b: f64,
    pub kappa: f64,
}

pub(crate) mod rows {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<f64>, D::Error> {
        let r = Vec::<Vec<f64>>::deserialize(d)?;
        matrix_from_rows(&r).map_err(serde::de::Error::custom)
    }
}

impl CrossVariogramSpec {
    pub fn p(&self) -> usize {
        self.v.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.p();
        if p == 0 {
            return Err(Error::invalid("cross variogram needs at least one component"));
        }
        if self.v.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("nugget offsets v must be >= 0, got {:?}", self.v)));
        }
        check_psd("beta", &self.beta, p, 1e-10)?;
        if self.beta.iter().any(|b| !(*b > 0.0)) {
            return Err(Error::invalid("beta entries must be strictly positive"));
        }
        if !(self.a > 0.0 && self.b >= 0.0 && self.kappa > 0.0 && self.kappa <= 2.0) {
            return Err(Error::invalid(format!(
                "need a > 0, b >= 0, kappa in (0, 2]; got a = {}, b = {}, kappa = {}",
                self.a, self.b, self.kappa
            )));
        }
        for i in 0..p {
            for j in 0..p {
                if !(self.v[i] + self.v[j] > self.beta[(i, j)]) {
                    return Err(Error::invalid(format!(
                        "gamma_{i}{j} reaches {} <= 0 at r = 1, h = 0; need v_i + v_j > beta_ij",
                        self.v[i] + self.v[j] - self.beta[(i, j)]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn gamma(&self, r: f64, h: f64) -> DMatrix<f64> {
        let phi = (-self.a * (1.0 - r) - self.b * h.abs().powf(self.kappa)).exp();
        DMatrix::from_fn(self.p(), self.p(), |i, j| self.v[i] + self.v[j] - self.beta[(i, j)] * phi)
    }
}

/// `sum_{k=0}^{K} cos(k theta) / (k^2 + gamma)` from precomputed `cos_k`, summed from the tail.
fn series_sum(cos_k: &[f64], gamma: f64) -> f64 {
    cos_k
        .iter()
        .enumerate()
        .rev()
        .map(|(k, c)| c / ((k * k) as f64 + gamma))
        .sum()
}

/// Scalar partial sum `sum_{k=0}^{truncation} cos(k arccos s) / (k^2 + gamma)`.
pub fn sinh_series(s: f64, gamma: f64, truncation: usize) -> f64 {
    let theta = s.clamp(-1.0, 1.0).acos();
    let cos_k: Vec<f64> = (0..=truncation).map(|k| (k as f64 * theta).cos()).collect();
    series_sum(&cos_k, gamma)
}

/// `K_ij(s, r, h) = sum_k cos(k arccos s) / (k^2 + gamma_ij(r, h))` on `S^1 x S^{d2} x R^d`.
#[derive(Debug, Clone)]
pub struct SinhSeriesKernel {
    dims: Dims,
    gamma: CrossVariogramSpec,
    truncation: usize,
}

impl SinhSeriesKernel {
    pub fn new(dims: Dims, gamma: CrossVariogramSpec, truncation: usize) -> Result<Self> {
        if dims.d1 != 1 {
            return Err(Error::invalid(format!("the sinh series kernel needs d1 = 1, got {}", dims.d1)));
        }
        if truncation == 0 {
            return Err(Error::invalid("truncation must be at least 1"));
        }
        gamma.validate()?;
        Ok(SinhSeriesKernel { dims, gamma, truncation })
    }

    pub fn variogram(&self) -> &CrossVariogramSpec {
        &self.gamma
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Bound on the neglected tail: `sum_{k > K} 1/k^2 < 1/K`.
    pub fn tail_bound(&self) -> f64 {
        1.0 / self.truncation as f64
    }

    fn checked_gamma(&self, inv: &Invariants3) -> Result<DMatrix<f64>> {
        let g = self.gamma.gamma(inv.r, inv.h);
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                if !(g[(i, j)] > 0.0) {
                    return Err(Error::domain(
                        "sinh_series",
                        format!("gamma_{i}{j}(r = {}, h = {}) = {} is not positive", inv.r, inv.h, g[(i, j)]),
                    ));
                }
            }
        }
        Ok(g)
    }

    /// Series value together with the truncation error bound.
    pub fn eval_with_bound(&self, inv: &Invariants3) -> Result<(DMatrix<f64>, f64)> {
        let g = self.checked_gamma(inv)?;
        let theta = inv.s.acos();
        let cos_k: Vec<f64> = (0..=self.truncation).map(|k| (k as f64 * theta).cos()).collect();
        let p = g.nrows();
        let mut out = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let v = series_sum(&cos_k, g[(i, j)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok((out, self.tail_bound()))
    }

    /// The displayed closed form `1/gamma + (pi/2) sinh(sqrt(gamma (pi - theta))) / sinh(sqrt(gamma))`,
    /// evaluated literally; only used to report its disagreement with the series.
    pub fn eval_closed_form(&self, inv: &Invariants3) -> Result<DMatrix<f64>> {
        let g = self.checked_gamma(inv)?;
        let theta = inv.s.acos();
        let p = g.nrows();
        Ok(DMatrix::from_fn(p, p, |i, j| {
            let gij = g[(i.min(j), i.max(j))];
            1.0 / gij + 0.5 * PI * (gij * (PI - theta)).sqrt().sinh() / gij.sqrt().sinh()
        }))
    }
}

impl MatrixKernel for SinhSeriesKernel {
    fn p(&self) -> usize {
        self.gamma.p()
    }

    fn dims(&self) -> Dims {
        self.dims
    }

    fn eval(&self, inv: &Invariants3) -> Result<DMatrix<f64>> {
        Ok(self.eval_with_bound(inv)?.0)
    }

    fn family(&self) -> &'static str {
        "sinh_series"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `sum_{k>=0} cos(k theta)/(k^2 + g) = 1/(2g) + pi cosh(sqrt(g)(pi - theta)) / (2 sqrt(g) sinh(pi sqrt(g)))`.
    fn classical(theta: f64, g: f64) -> f64 {
        let q = g.sqrt();
        0.5 / g + PI * (q * (PI - theta)).cosh() / (2.0 * q * (PI * q).sinh())
    }

    fn spec() -> CrossVariogramSpec {
        CrossVariogramSpec {
            v: vec![0.8, 1.2],
            beta: DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.5]),
            a: 1.0,
            b: 0.5,
            kappa: 1.0,
        }
    }

    #[test]
    fn series_at_s_one() {
        let want = 1.0 + (PI / PI.tanh() - 1.0) / 2.0;
        assert!((want - 2.076_674).abs() < 1e-6);
        assert!((sinh_series(1.0, 1.0, 2000) - want).abs() < 5e-4);
        assert!((classical(0.0, 1.0) - want).abs() < 1e-14);
    }

    #[test]
    fn series_at_s_zero_matches_partial_sums() {
        // cos(k pi/2) = 1, 0, -1, 0, ...: sum_m (-1)^m / (4 m^2 + g)
        let g = 0.7;
        let brute: f64 = (0..200_000).map(|m| (if m % 2 == 0 { 1.0 } else { -1.0 }) / (4.0 * (m as f64).powi(2) + g)).sum();
        assert!((sinh_series(0.0, g, 100_000) - brute).abs() < 1e-9);
        assert!((sinh_series(0.0, g, 100_000) - classical(PI / 2.0, g)).abs() < 1e-9);
    }

    #[test]
    fn entries_decrease_in_gamma() {
        let mut last = f64::INFINITY;
        for i in 1..40 {
            let v = sinh_series(0.3, 0.25 * i as f64, 500);
            assert!(v < last);
            last = v;
        }
        assert!(sinh_series(0.3, 1e12, 500) < 1e-9);
    }

    #[test]
    fn construction_checks() {
        let dims = Dims::new(1, 2, 1).unwrap();
        assert!(SinhSeriesKernel::new(dims, spec(), 100).is_ok());
        assert!(SinhSeriesKernel::new(Dims::new(2, 2, 1).unwrap(), spec(), 100).is_err());
        let mut bad = spec();
        bad.v = vec![0.4, 1.2];
        assert!(SinhSeriesKernel::new(dims, bad, 100).is_err());
    }

    #[test]
    fn closed_form_printed_value() {
        let k = SinhSeriesKernel::new(
            Dims::new(1, 1, 1).unwrap(),
            CrossVariogramSpec {
                v: vec![1.0],
                beta: DMatrix::from_element(1, 1, 1.0),
                a: 1.0,
                b: 1.0,
                kappa: 1.0,
            },
            10,
        )
        .unwrap();
        // gamma(r, h) = 2 - exp(-1 + r - h); at r = 1, h = 0 it equals 1
        let v = k.eval_closed_form(&Invariants3::new(1.0, 1.0, 0.0)).unwrap()[(0, 0)];
        let want = 1.0 + 0.5 * PI * PI.sqrt().sinh() / 1f64.sinh();
        assert!((v - want).abs() < 1e-12);
    }
}
