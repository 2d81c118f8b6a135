use nalgebra::DMatrix;

use super::{Dims, ExpansionKernel, MatrixKernel};
use crate::error::{Error, Result};
use crate::geometry::Invariants3;
use crate::linalg::{asymmetry, contrast_max_ratio};
use crate::specfun::{beta_fn, gauss_2f1};

/// `F(t; alpha, tau, nu) = B(alpha, nu + tau) / B(alpha, nu) * 2F1(tau, alpha; alpha + nu + tau; t)`,
/// the mixture of `((1 - delta) / (1 - delta t))^tau` over a Beta(alpha, nu) law for `delta`.
pub fn fclass_f(t: f64, alpha: f64, tau: f64, nu: f64) -> Result<f64> {
    Ok(beta_fn(alpha, nu + tau)? / beta_fn(alpha, nu)? * gauss_2f1(tau, alpha, alpha + nu + tau, t)?)
}

/// `K_ij(s, r, h) = B(alpha_ij, nu_ij) F(s C_ij(r, h); alpha_ij, tau, nu_ij)` with
/// `alpha`, `nu` conditionally negative definite and `C` a kernel on `S^{d2} x R^d` bounded by 1.
#[derive(Debug, Clone)]
pub struct FClassKernel {
    dims: Dims,
    alpha: DMatrix<f64>,
    nu: DMatrix<f64>,
    tau: f64,
    inner: ExpansionKernel,
}

fn check_cnd_positive(name: &str, m: &DMatrix<f64>, p: usize) -> Result<()> {
    if m.shape() != (p, p) {
        return Err(Error::dims(format!("{name} is {:?}, expected {p}x{p}", m.shape())));
    }
    if m.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("{name} entries must be positive")));
    }
    if asymmetry(m) > 1e-12 * m.amax() {
        return Err(Error::invalid(format!("{name} is not symmetric")));
    }
    let ratio = contrast_max_ratio(m)?;
    if ratio > 1e-10 {
        return Err(Error::AuditFailed {
            stage: "cnd_audit".into(),
            detail: format!("{name} is not conditionally negative definite (contrast eigenvalue ratio {ratio:e})"),
        });
    }
    Ok(())
}

impl FClassKernel {
    /// `inner` must not depend on `s` (all terms of degree `k1 = 0`); it is rescaled so
    /// that its largest diagonal entry at `(1, 0)` is at most 1.
    pub fn new(dims: Dims, alpha: DMatrix<f64>, nu: DMatrix<f64>, tau: f64, inner: ExpansionKernel) -> Result<Self> {
        let p = inner.p();
        check_cnd_positive("alpha", &alpha, p)?;
        check_cnd_positive("nu", &nu, p)?;
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::invalid(format!("tau = {tau} must be positive")));
        }
        let idims = inner.dims();
        if idims.d2 != dims.d2 || idims.d != dims.d {
            return Err(Error::dims(format!("inner kernel on {idims:?} does not match {dims:?}")));
        }
        if inner.terms().iter().any(|t| t.k1 != 0) {
            return Err(Error::invalid("inner kernel terms must have k1 = 0"));
        }
        let c0 = inner.coefficient_sum(0.0);
        let peak = (0..p).map(|i| c0[(i, i)]).fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(Error::invalid("inner kernel vanishes at the origin"));
        }
        let inner = if peak > 1.0 { inner.scaled(1.0 / peak) } else { inner };
        Ok(FClassKernel {
            dims,
            alpha,
            nu,
            tau,
            inner,
        })
    }

    pub fn inner(&self) -> &ExpansionKernel {
        &self.inner
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn nu(&self) -> &DMatrix<f64> {
        &self.nu
    }
}

impl MatrixKernel for FClassKernel {
    fn p(&self) -> usize {
        self.alpha.nrows()
    }

    fn dims(&self) -> Dims {
        self.dims
    }

    fn eval(&self, inv: &Invariants3) -> Result<DMatrix<f64>> {
        let c = self.inner.eval(&Invariants3::new(1.0, inv.r, inv.h))?;
        let p = self.p();
        let mut out = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let t = (inv.s * c[(i, j)]).clamp(-1.0, 1.0);
                let (a, n) = (self.alpha[(i, j)], self.nu[(i, j)]);
                let v = beta_fn(a, n + self.tau)? * gauss_2f1(self.tau, a, a + n + self.tau, t)?;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(out)
    }

    fn family(&self) -> &'static str {
        "f_class"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ExpansionTerm, RadialProfile};
    use crate::specfun::gauss_jacobi_rule_general;

    fn inner(p: usize, scale: f64) -> ExpansionKernel {
        ExpansionKernel::new(
            Dims::new(1, 2, 1).unwrap(),
            vec![ExpansionTerm {
                k1: 0,
                k2: 1,
                matrix: DMatrix::from_fn(p, p, |i, j| if i == j { scale } else { 0.5 * scale }),
                profile: RadialProfile::Exponential { alpha: 1.0 },
            }],
            false,
        )
        .unwrap()
    }

    #[test]
    fn value_at_s_zero() {
        let alpha = DMatrix::from_row_slice(2, 2, &[1.0, 1.5, 1.5, 2.0]);
        let nu = DMatrix::from_row_slice(2, 2, &[0.5, 0.75, 0.75, 1.0]);
        let k = FClassKernel::new(Dims::new(3, 2, 1).unwrap(), alpha.clone(), nu.clone(), 1.3, inner(2, 3.0)).unwrap();
        let v = k.eval(&Invariants3::new(0.0, 0.4, 0.7)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = beta_fn(alpha[(i, j)], nu[(i, j)] + 1.3).unwrap();
                assert!((v[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn f_at_half() {
        let f = fclass_f(0.5, 1.0, 1.0, 1.0).unwrap();
        let want = beta_fn(1.0, 2.0).unwrap() / beta_fn(1.0, 1.0).unwrap() * gauss_2f1(1.0, 1.0, 3.0, 0.5).unwrap();
        assert!((f - want).abs() < 1e-15);
        // 2F1(1, 1; 3; z) = 2 (z + (1 - z) ln(1 - z)) / z^2
        let z: f64 = 0.5;
        let closed = 2.0 * (z + (1.0 - z) * (1.0 - z).ln()) / (z * z);
        assert!((f - 0.5 * closed).abs() < 1e-14);
    }

    #[test]
    fn mixture_identity() {
        for &(t, a, tau, nu) in &[(0.5, 1.0, 1.0, 1.0), (-0.9, 0.6, 2.2, 1.7), (0.97, 2.5, 0.4, 3.0), (1.0, 1.2, 0.8, 2.0)] {
            let rule = gauss_jacobi_rule_general(256, nu - 1.0, a - 1.0).unwrap();
            // delta = (1 + x) / 2 maps the Jacobi weight to delta^{a-1} (1 - delta)^{nu-1}
            let jac = 0.5f64.powf(a + nu - 1.0);
            let integral: f64 = rule.integrate(|x| {
                let d = 0.5 * (1.0 + x);
                ((1.0 - d) / (1.0 - d * t)).powf(tau)
            }) * jac
                / beta_fn(a, nu).unwrap();
            assert!((integral - fclass_f(t, a, tau, nu).unwrap()).abs() < 1e-10, "{t} {a} {tau} {nu}");
        }
    }

    #[test]
    fn rejects_non_cnd_parameters() {
        // contrast (1, -1): x'Mx = 2 (5 - 1) > 0
        let bad = DMatrix::from_row_slice(2, 2, &[5.0, 1.0, 1.0, 5.0]);
        let good = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let dims = Dims::new(1, 2, 1).unwrap();
        assert!(FClassKernel::new(dims, bad, good.clone(), 1.0, inner(2, 1.0)).is_err());
        assert!(FClassKernel::new(dims, good.clone(), good, 1.0, inner(2, 1.0)).is_ok());
    }
}
