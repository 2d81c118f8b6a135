use nalgebra::DMatrix;

use super::{check_psd, Dims, MatrixKernel, RadialProfile};
use crate::error::{Error, Result};
use crate::geometry::Invariants3;
use crate::specfun::GegenbauerTable;

/// One term `A * phi(h) * C_{k1}^{d1}(s) C_{k2}^{d2}(r)` with `A` symmetric PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTerm {
    pub k1: usize,
    pub k2: usize,
    pub matrix: DMatrix<f64>,
    pub profile: RadialProfile,
}

/// Finite double Gegenbauer expansion `sum_k B_k(h) C_{k1}(s) C_{k2}(r)`.
#[derive(Debug, Clone)]
pub struct ExpansionKernel {
    dims: Dims,
    p: usize,
    terms: Vec<ExpansionTerm>,
    normalized: bool,
}

impl ExpansionKernel {
    /// With `normalized`, the coefficient sum at `h = 0` must have a unit diagonal.
    pub fn new(dims: Dims, terms: Vec<ExpansionTerm>, normalized: bool) -> Result<Self> {
        let p = terms
            .first()
            .map(|t| t.matrix.nrows())
            .ok_or_else(|| Error::invalid("expansion needs at least one term"))?;
        if p == 0 {
            return Err(Error::invalid("coefficient matrices must be non-empty"));
        }
        for t in &terms {
            check_psd(&format!("coefficient ({}, {})", t.k1, t.k2), &t.matrix, p, 1e-10)?;
            t.profile.validate()?;
        }
        let kernel = ExpansionKernel {
            dims,
            p,
            terms,
            normalized,
        };
        if normalized {
            let total = kernel.coefficient_sum(0.0);
            if let Some(i) = (0..p).find(|&i| (total[(i, i)] - 1.0).abs() > 1e-10) {
                return Err(Error::invalid(format!(
                    "normalized expansion has coefficient-sum diagonal {} at index {i}",
                    total[(i, i)]
                )));
            }
        }
        Ok(kernel)
    }

    pub fn terms(&self) -> &[ExpansionTerm] {
        &self.terms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Largest degrees `(K1, K2)` present.
    pub fn max_degree(&self) -> (usize, usize) {
        self.terms
            .iter()
            .fold((0, 0), |(a, b), t| (a.max(t.k1), b.max(t.k2)))
    }

    /// `B_k(h)`, summing all terms sharing the degree pair.
    pub fn coefficient(&self, k1: usize, k2: usize, h: f64) -> DMatrix<f64> {
        self.terms
            .iter()
            .filter(|t| t.k1 == k1 && t.k2 == k2)
            .fold(DMatrix::zeros(self.p, self.p), |acc, t| acc + &t.matrix * t.profile.eval(h))
    }

    /// `sum_k B_k(h)`, the kernel at `s = r = 1`.
    pub fn coefficient_sum(&self, h: f64) -> DMatrix<f64> {
        self.terms
            .iter()
            .fold(DMatrix::zeros(self.p, self.p), |acc, t| acc + &t.matrix * t.profile.eval(h))
    }

    /// Multiplies every coefficient by `c > 0`.
    pub fn scaled(&self, c: f64) -> ExpansionKernel {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.matrix *= c;
        }
        out.normalized = self.normalized && c == 1.0;
        out
    }
}

impl MatrixKernel for ExpansionKernel {
    fn p(&self) -> usize {
        self.p
    }

    fn dims(&self) -> Dims {
        self.dims
    }

    fn eval(&self, inv: &Invariants3) -> Result<DMatrix<f64>> {
        let (k1_max, k2_max) = self.max_degree();
        let cs = GegenbauerTable::new(self.dims.d1, k1_max, inv.s);
        let cr = GegenbauerTable::new(self.dims.d2, k2_max, inv.r);
        let mut out = DMatrix::zeros(self.p, self.p);
        for t in &self.terms {
            let w = cs.get(t.k1) * cr.get(t.k2) * t.profile.eval(inv.h);
            out += &t.matrix * w;
        }
        Ok(out)
    }

    fn family(&self) -> &'static str {
        "expansion"
    }
}
