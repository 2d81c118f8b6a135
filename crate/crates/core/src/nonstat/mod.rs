//! Kernels on `S^1 x S^1 x R^d` that are not radially symmetric in `R^d`:
//!
//! `K((x, u), (x', u')) = sum_k sum_{J, J'} Upsilon_{k,J,J'}(u, u') Phi_{k,J}(x) Phi_{k,J'}(x')`
//!
//! where `k = (k1, k2)` and `Phi_{k,J}(x) = Y_{k1,j1}(x1) Y_{k2,j2}(x2)` is a product of real
//! circle harmonics, orthonormal for the uniform probability measure. The harmonic index
//! `J = (j1, j2)` is stored flattened as `j1 * kappa(k2) + j2`.

mod recovery;

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Dims, Site};
use crate::kernels::{check_psd, PairKernel, RadialProfile};

pub use recovery::{
    default_nodes, l2_truncation_error, recover_all, recover_upsilon, square_summability_report, tail_coefficient_sum,
    xi_pd_audit, DecayTable, RecoveredCoefficient, XiAuditReport,
};

/// Number of real circle harmonics of degree `k`: 1 for `k = 0`, else 2 (cos, sin).
pub fn kappa(k: usize) -> usize {
    if k == 0 {
        1
    } else {
        2
    }
}

/// Number of torus harmonics `kappa(k1) kappa(k2)` of bidegree `(k1, k2)`.
pub fn torus_multiplicity(k1: usize, k2: usize) -> usize {
    kappa(k1) * kappa(k2)
}

/// `Y_{k,j}(theta)`: `1`, `sqrt(2) cos(k theta)`, `sqrt(2) sin(k theta)`.
pub fn circle_harmonic(k: usize, j: usize, theta: f64) -> f64 {
    match (k, j) {
        (0, _) => 1.0,
        (_, 0) => SQRT_2 * (k as f64 * theta).cos(),
        _ => SQRT_2 * (k as f64 * theta).sin(),
    }
}

/// All `Phi_{k,J}` at the point with angles `(t1, t2)`, in flattened `J` order.
pub fn torus_harmonics(k1: usize, k2: usize, t1: f64, t2: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(torus_multiplicity(k1, k2));
    for j1 in 0..kappa(k1) {
        for j2 in 0..kappa(k2) {
            out.push(circle_harmonic(k1, j1, t1) * circle_harmonic(k2, j2, t2));
        }
    }
    out
}

/// Scalar functions `g(u)` on `R^d` used by separable coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GFunction {
    /// `amplitude * exp(-|u - center|^2 / (2 width^2))`
    GaussianBump { center: Vec<f64>, width: f64, amplitude: f64 },
    /// `sum_i coeffs[i] * u[axis]^i`
    Polynomial { axis: usize, coeffs: Vec<f64> },
    /// `amplitude * sin(frequency * u[axis] + phase)`
    Sinusoid { axis: usize, frequency: f64, phase: f64, amplitude: f64 },
}

impl GFunction {
    pub fn eval(&self, u: &[f64]) -> f64 {
        match self {
            GFunction::GaussianBump { center, width, amplitude } => {
                let d2: f64 = u.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                amplitude * (-d2 / (2.0 * width * width)).exp()
            }
            GFunction::Polynomial { axis, coeffs } => {
                let x = u[*axis];
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            GFunction::Sinusoid { axis, frequency, phase, amplitude } => {
                amplitude * (frequency * u[*axis] + phase).sin()
            }
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        let ok = match self {
            GFunction::GaussianBump { center, width, amplitude } => {
                center.len() == d && *width > 0.0 && amplitude.is_finite()
            }
            GFunction::Polynomial { axis, coeffs } => *axis < d && coeffs.iter().all(|c| c.is_finite()),
            GFunction::Sinusoid { axis, frequency, phase, amplitude } => {
                *axis < d && frequency.is_finite() && phase.is_finite() && amplitude.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid g function for d = {d}: {self:?}")))
        }
    }
}

/// Coefficient family of one bidegree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UpsilonForm {
    /// `delta_{J J'} A rho(|u - u'|)`
    Radial {
        #[serde(with = "crate::kernels::rows")]
        matrix: DMatrix<f64>,
        profile: RadialProfile,
    },
    /// `g_J(u) g_{J'}(u') A`, one `g` per harmonic index `J`.
    Separable {
        #[serde(with = "crate::kernels::rows")]
        matrix: DMatrix<f64>,
        g: Vec<GFunction>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiTerm {
    pub k1: usize,
    pub k2: usize,
    pub form: UpsilonForm,
}

impl XiTerm {
    fn matrix(&self) -> &DMatrix<f64> {
        match &self.form {
            UpsilonForm::Radial { matrix, .. } | UpsilonForm::Separable { matrix, .. } => matrix,
        }
    }

    fn upsilon(&self, jj: usize, jp: usize, u: &[f64], v: &[f64]) -> DMatrix<f64> {
        match &self.form {
            UpsilonForm::Radial { matrix, profile } => {
                if jj == jp {
                    matrix * profile.eval(distance(u, v))
                } else {
                    DMatrix::zeros(matrix.nrows(), matrix.ncols())
                }
            }
            UpsilonForm::Separable { matrix, g } => matrix * (g[jj].eval(u) * g[jp].eval(v)),
        }
    }
}

pub(crate) fn distance(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

/// Finite member of the class on `S^1 x S^1 x R^d`.
#[derive(Debug, Clone)]
pub struct XiKernel {
    p: usize,
    d: u32,
    terms: Vec<XiTerm>,
}

impl XiKernel {
    /// Checks shapes, index ranges and that every coefficient matrix is PSD.
    pub fn new(d: u32, terms: Vec<XiTerm>) -> Result<Self> {
        let k = Self::new_unchecked(d, terms)?;
        for t in &k.terms {
            check_psd(&format!("coefficient ({}, {})", t.k1, t.k2), t.matrix(), k.p, 1e-10)?;
        }
        Ok(k)
    }

    /// Shape and range checks only; lets audits be tested on invalid coefficients.
    pub fn new_unchecked(d: u32, terms: Vec<XiTerm>) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("Euclidean dimension must be >= 1"));
        }
        let p = terms
            .first()
            .map(|t| t.matrix().nrows())
            .ok_or_else(|| Error::invalid("need at least one term"))?;
        for t in &terms {
            if t.matrix().shape() != (p, p) || p == 0 {
                return Err(Error::dims(format!("coefficient matrices must all be {p}x{p}")));
            }
            match &t.form {
                UpsilonForm::Radial { profile, .. } => profile.validate()?,
                UpsilonForm::Separable { g, .. } => {
                    let need = torus_multiplicity(t.k1, t.k2);
                    if g.len() != need {
                        return Err(Error::invalid(format!(
                            "degree ({}, {}) has {need} harmonics but {} g functions",
                            t.k1,
                            t.k2,
                            g.len()
                        )));
                    }
                    for f in g {
                        f.validate(d as usize)?;
                    }
                }
            }
        }
        Ok(XiKernel { p, d, terms })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn terms(&self) -> &[XiTerm] {
        &self.terms
    }

    /// `(N, N')`: the largest degrees present.
    pub fn truncation(&self) -> (usize, usize) {
        self.terms.iter().fold((0, 0), |(a, b), t| (a.max(t.k1), b.max(t.k2)))
    }

    /// The kernel keeping only degrees `k1 <= n1`, `k2 <= n2`.
    pub fn truncated(&self, n1: usize, n2: usize) -> Option<XiKernel> {
        let terms: Vec<XiTerm> = self.terms.iter().filter(|t| t.k1 <= n1 && t.k2 <= n2).cloned().collect();
        (!terms.is_empty()).then(|| XiKernel { p: self.p, d: self.d, terms })
    }

    /// `Upsilon_{k,J,J'}(u, u')`; zero outside the expansion.
    pub fn upsilon(&self, k1: usize, k2: usize, jj: usize, jp: usize, u: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
        let m = torus_multiplicity(k1, k2);
        if jj >= m || jp >= m {
            return Err(Error::invalid(format!(
                "harmonic indices ({jj}, {jp}) out of range for degree ({k1}, {k2})"
            )));
        }
        Ok(self
            .terms
            .iter()
            .filter(|t| t.k1 == k1 && t.k2 == k2)
            .fold(DMatrix::zeros(self.p, self.p), |acc, t| acc + t.upsilon(jj, jp, u, v)))
    }

    /// Kernel value at angles and Euclidean coordinates.
    pub fn eval_angles(&self, a: (f64, f64), u: &[f64], b: (f64, f64), v: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.p, self.p);
        for t in &self.terms {
            let pa = torus_harmonics(t.k1, t.k2, a.0, a.1);
            let pb = torus_harmonics(t.k1, t.k2, b.0, b.1);
            match &t.form {
                UpsilonForm::Radial { matrix, profile } => {
                    let dot: f64 = pa.iter().zip(&pb).map(|(x, y)| x * y).sum();
                    out += matrix * (dot * profile.eval(distance(u, v)));
                }
                UpsilonForm::Separable { matrix, g } => {
                    let left: f64 = pa.iter().zip(g).map(|(x, f)| x * f.eval(u)).sum();
                    let right: f64 = pb.iter().zip(g).map(|(x, f)| x * f.eval(v)).sum();
                    out += matrix * (left * right);
                }
            }
        }
        out
    }

    pub fn eval_xi(&self, a: &Site, b: &Site) -> Result<DMatrix<f64>> {
        let dims = Dims { d1: 1, d2: 1, d: self.d };
        if a.dims() != dims || b.dims() != dims {
            return Err(Error::dims(format!(
                "sites in {:?} and {:?} given to a kernel on {dims:?}",
                a.dims(),
                b.dims()
            )));
        }
        Ok(self.eval_angles((a.x1.angle(), a.x2.angle()), &a.u, (b.x1.angle(), b.x2.angle()), &b.u))
    }
}

impl PairKernel for XiKernel {
    fn components(&self) -> usize {
        self.p
    }

    fn domain(&self) -> Dims {
        Dims { d1: 1, d2: 1, d: self.d }
    }

    fn eval_pair(&self, a: &Site, b: &Site) -> Result<DMatrix<f64>> {
        self.eval_xi(a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::UnitVector;

    fn site(t1: f64, t2: f64, u: &[f64]) -> Site {
        Site::new(UnitVector::from_angle(t1), UnitVector::from_angle(t2), u.to_vec()).unwrap()
    }

    #[test]
    fn harmonics_are_orthonormal() {
        let n = 32;
        for (k, j) in [(0, 0), (1, 0), (1, 1), (3, 0), (3, 1)] {
            for (l, i) in [(0, 0), (1, 0), (1, 1), (3, 0), (3, 1)] {
                let ip: f64 = (0..n)
                    .map(|m| {
                        let t = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
                        circle_harmonic(k, j, t) * circle_harmonic(l, i, t)
                    })
                    .sum::<f64>()
                    / n as f64;
                let want = if (k, j) == (l, i) { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn constant_term_reduces_to_profile() {
        let k = XiKernel::new(
            2,
            vec![XiTerm {
                k1: 0,
                k2: 0,
                form: UpsilonForm::Radial {
                    matrix: DMatrix::identity(2, 2),
                    profile: RadialProfile::Gaussian { alpha: 1.0 },
                },
            }],
        )
        .unwrap();
        let a = site(0.3, 1.2, &[0.0, 1.0]);
        let b = site(-2.0, 0.4, &[0.5, 0.2]);
        let h2 = 0.25 + 0.64;
        assert!((k.eval_xi(&a, &b).unwrap() - DMatrix::identity(2, 2) * (-h2 as f64).exp()).amax() < 1e-14);
    }

    #[test]
    fn swap_symmetry_of_separable_terms() {
        let g = vec![
            GFunction::GaussianBump { center: vec![0.3], width: 0.8, amplitude: 1.0 },
            GFunction::Polynomial { axis: 0, coeffs: vec![0.5, -0.2, 0.1] },
        ];
        let k = XiKernel::new(
            1,
            vec![XiTerm {
                k1: 0,
                k2: 2,
                form: UpsilonForm::Separable {
                    matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 0.5]),
                    g,
                },
            }],
        )
        .unwrap();
        let a = site(0.1, 2.1, &[0.7]);
        let b = site(1.5, -0.6, &[-0.4]);
        let ab = k.eval_xi(&a, &b).unwrap();
        let ba = k.eval_xi(&b, &a).unwrap();
        assert!((ab - ba.transpose()).amax() < 1e-14);
    }

    #[test]
    fn rejects_wrong_g_count() {
        let t = XiTerm {
            k1: 1,
            k2: 1,
            form: UpsilonForm::Separable {
                matrix: DMatrix::identity(1, 1),
                g: vec![GFunction::Polynomial { axis: 0, coeffs: vec![1.0] }],
            },
        };
        assert!(XiKernel::new(1, vec![t]).is_err());
    }
}
