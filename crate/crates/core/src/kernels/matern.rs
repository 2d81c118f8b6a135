use nalgebra::DMatrix;

use super::{Dims, MatrixKernel, VarianceScaling};
use crate::error::{Error, Result};
use crate::geometry::Invariants3;
use crate::linalg::asymmetry;
use crate::specfun::{log_gamma, matern};
use crate::validation::{default_a_grid, default_sr_grid, matern_condition_audit, DEFAULT_TOL_MATERN};

/// `K_ij = sigma_i sigma_j rho_ij(s, r) M(h; alpha, nu_ij(s, r))` with
/// `rho_ij = beta_ij Gamma(nu_ij) / Gamma(nu_ij + d/2)`, smoothness
/// `nu_ii(s, r) = nu_i + eps (2 - s - r)` and `nu_ij = (nu_ii + nu_jj) / 2`.
#[derive(Debug, Clone)]
pub struct MaternSpectralKernel {
    dims: Dims,
    sigma: VarianceScaling,
    alpha: f64,
    beta: DMatrix<f64>,
    nu: Vec<f64>,
    nu_slope: f64,
}

impl MaternSpectralKernel {
    /// Validates the parameters and runs the construction-time condition audit.
    pub fn new(
        dims: Dims,
        sigma: VarianceScaling,
        alpha: f64,
        beta: DMatrix<f64>,
        nu: Vec<f64>,
        nu_slope: f64,
    ) -> Result<Self> {
        let k = Self::new_unchecked(dims, sigma, alpha, beta, nu, nu_slope)?;
        let report = matern_condition_audit(&k, &default_a_grid(), &default_sr_grid(), DEFAULT_TOL_MATERN)?;
        if !report.passed {
            return Err(Error::AuditFailed {
                stage: "matern_condition_audit".into(),
                detail: format!("minimum eigenvalue ratio {:e}", report.min_eig_ratio),
            });
        }
        Ok(k)
    }

    /// Parameter checks only; the condition audit is left to the caller.
    pub fn new_unchecked(
        dims: Dims,
        sigma: VarianceScaling,
        alpha: f64,
        beta: DMatrix<f64>,
        nu: Vec<f64>,
        nu_slope: f64,
    ) -> Result<Self> {
        let p = nu.len();
        if p == 0 || sigma.as_slice().len() != p || beta.shape() != (p, p) {
            return Err(Error::dims(format!(
                "nu has {p} entries, sigma {}, beta is {:?}",
                sigma.as_slice().len(),
                beta.shape()
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha = {alpha} must be positive")));
        }
        if nu.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("smoothness values must be positive, got {nu:?}")));
        }
        if !(nu_slope >= 0.0 && nu_slope.is_finite()) {
            return Err(Error::invalid(format!("nu_slope = {nu_slope} must be >= 0")));
        }
        if beta.iter().any(|v| !v.is_finite()) || asymmetry(&beta) > 1e-12 {
            return Err(Error::invalid("beta must be a finite symmetric matrix"));
        }
        if (0..p).any(|i| (beta[(i, i)] - 1.0).abs() > 1e-12) {
            return Err(Error::invalid("beta must have ones on the diagonal"));
        }
        Ok(MaternSpectralKernel {
            dims,
            sigma,
            alpha,
            beta,
            nu,
            nu_slope,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn sigma(&self) -> &[f64] {
        self.sigma.as_slice()
    }

    pub fn nu_ii(&self, i: usize, s: f64, r: f64) -> f64 {
        self.nu[i] + self.nu_slope * (2.0 - s - r)
    }

    pub fn nu_ij(&self, i: usize, j: usize, s: f64, r: f64) -> f64 {
        0.5 * (self.nu_ii(i, s, r) + self.nu_ii(j, s, r))
    }

    /// `[beta_ij a^{nu_ij(s, r)}]`, required positive semidefinite for `a` in `(0, 1]`.
    pub fn condition_matrix(&self, a: f64, s: f64, r: f64) -> DMatrix<f64> {
        let p = self.nu.len();
        DMatrix::from_fn(p, p, |i, j| self.beta[(i, j)] * a.powf(self.nu_ij(i, j, s, r)))
    }

    /// `rho_ij(s, r) = beta_ij Gamma(nu_ij) / Gamma(nu_ij + d/2)`.
    pub fn rho(&self, i: usize, j: usize, s: f64, r: f64) -> Result<f64> {
        let nu = self.nu_ij(i, j, s, r);
        let half_d = 0.5 * self.dims.d as f64;
        Ok(self.beta[(i, j)] * (log_gamma(nu)? - log_gamma(nu + half_d)?).exp())
    }

    /// `sigma_i sigma_j beta_ij alpha^{2 nu} (alpha^2 + w^2)^{-nu - d/2}` at frequency norm `w`.
    pub fn spectral_density(&self, i: usize, j: usize, s: f64, r: f64, w: f64) -> f64 {
        let nu = self.nu_ij(i, j, s, r);
        let half_d = 0.5 * self.dims.d as f64;
        let sg = self.sigma.as_slice();
        sg[i] * sg[j] * self.beta[(i, j)] * self.alpha.powf(2.0 * nu) * (self.alpha.powi(2) + w * w).powf(-nu - half_d)
    }
}

impl MatrixKernel for MaternSpectralKernel {
    fn p(&self) -> usize {
        self.nu.len()
    }

    fn dims(&self) -> Dims {
        self.dims
    }

    fn eval(&self, inv: &Invariants3) -> Result<DMatrix<f64>> {
        let p = self.p();
        let sg = self.sigma.as_slice();
        let mut out = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let nu = self.nu_ij(i, j, inv.s, inv.r);
                let v = sg[i] * sg[j] * self.rho(i, j, inv.s, inv.r)? * matern(inv.h, self.alpha, nu);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    fn family(&self) -> &'static str {
        "matern_spectral"
    }
}
