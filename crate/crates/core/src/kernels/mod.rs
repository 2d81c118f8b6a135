//! Componentwise-isotropic matrix-valued kernels `K(s, r, h)`.

mod expansion;
mod fclass;
mod matern;
mod profile;
mod sinh;

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

pub use crate::geometry::Dims;
use crate::error::{Error, Result};
use crate::geometry::{reduce, Invariants3, Site};

pub use expansion::{ExpansionKernel, ExpansionTerm};
pub use fclass::{fclass_f, FClassKernel};
pub use matern::MaternSpectralKernel;
pub use profile::RadialProfile;
pub use sinh::{sinh_series, CrossVariogramSpec, SinhSeriesKernel, DEFAULT_TRUNCATION};
pub(crate) use sinh::rows;

/// A `p x p` matrix-valued kernel on `S^{d1} x S^{d2} x R^d` depending only on `(s, r, h)`.
pub trait MatrixKernel: Send + Sync + Debug {
    fn p(&self) -> usize;
    fn dims(&self) -> Dims;
    fn eval(&self, inv: &Invariants3) -> Result<DMatrix<f64>>;

    fn family(&self) -> &'static str {
        "custom"
    }
}

impl<K: MatrixKernel + ?Sized> MatrixKernel for Arc<K> {
    fn p(&self) -> usize {
        (**self).p()
    }
    fn dims(&self) -> Dims {
        (**self).dims()
    }
    fn eval(&self, inv: &Invariants3) -> Result<DMatrix<f64>> {
        (**self).eval(inv)
    }
    fn family(&self) -> &'static str {
        (**self).family()
    }
}

impl<K: MatrixKernel + ?Sized> MatrixKernel for &K {
    fn p(&self) -> usize {
        (**self).p()
    }
    fn dims(&self) -> Dims {
        (**self).dims()
    }
    fn eval(&self, inv: &Invariants3) -> Result<DMatrix<f64>> {
        (**self).eval(inv)
    }
    fn family(&self) -> &'static str {
        (**self).family()
    }
}

/// A kernel evaluated on pairs of full sites; every [`MatrixKernel`] is one.
pub trait PairKernel: Send + Sync {
    fn components(&self) -> usize;
    fn domain(&self) -> Dims;
    fn eval_pair(&self, a: &Site, b: &Site) -> Result<DMatrix<f64>>;
}

impl<K: MatrixKernel + ?Sized> PairKernel for K {
    fn components(&self) -> usize {
        MatrixKernel::p(self)
    }
    fn domain(&self) -> Dims {
        MatrixKernel::dims(self)
    }
    fn eval_pair(&self, a: &Site, b: &Site) -> Result<DMatrix<f64>> {
        self.eval(&reduce(a, b)?)
    }
}

fn check_sites(dims: Dims, sites: &[Site]) -> Result<()> {
    match sites.iter().find(|s| s.dims() != dims) {
        Some(s) => Err(Error::dims(format!(
            "site in {:?} given to a kernel on {dims:?}",
            s.dims()
        ))),
        None => Ok(()),
    }
}

/// The `pN x pN` Gram matrix, index `site * p + component`; exactly symmetric.
pub fn gram<K: PairKernel + ?Sized>(kernel: &K, sites: &[Site]) -> Result<DMatrix<f64>> {
    check_sites(kernel.domain(), sites)?;
    let p = kernel.components();
    let n = sites.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let blocks: Vec<DMatrix<f64>> = pairs
        .par_iter()
        .map(|&(a, b)| kernel.eval_pair(&sites[a], &sites[b]))
        .collect::<Result<_>>()?;
    let mut g = DMatrix::zeros(n * p, n * p);
    for (&(a, b), block) in pairs.iter().zip(&blocks) {
        for i in 0..p {
            for j in 0..p {
                let v = if a == b && j < i { block[(j, i)] } else { block[(i, j)] };
                g[(a * p + i, b * p + j)] = v;
                g[(b * p + j, a * p + i)] = v;
            }
        }
    }
    Ok(g)
}

/// Cross-covariance `K(a_m, b_n)` between two site lists, `(p |A|) x (p |B|)`.
pub fn cross_gram<K: PairKernel + ?Sized>(kernel: &K, a: &[Site], b: &[Site]) -> Result<DMatrix<f64>> {
    check_sites(kernel.domain(), a)?;
    check_sites(kernel.domain(), b)?;
    let p = kernel.components();
    let pairs: Vec<(usize, usize)> = (0..a.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect();
    let blocks: Vec<DMatrix<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| kernel.eval_pair(&a[i], &b[j]))
        .collect::<Result<_>>()?;
    let mut g = DMatrix::zeros(a.len() * p, b.len() * p);
    for (&(m, n), block) in pairs.iter().zip(&blocks) {
        g.view_mut((m * p, n * p), (p, p)).copy_from(block);
    }
    Ok(g)
}

/// Positive standard deviations `sigma_i` of the field components.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceScaling(Vec<f64>);

impl VarianceScaling {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.is_empty() || sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("sigma entries must be positive, got {sigma:?}")));
        }
        Ok(VarianceScaling(sigma))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `D K D` with `D = diag(scale)`.
#[derive(Debug, Clone)]
pub struct ScaledKernel {
    inner: Arc<dyn MatrixKernel>,
    scale: Vec<f64>,
}

impl ScaledKernel {
    pub fn scale(&self) -> &[f64] {
        &self.scale
    }
}

impl MatrixKernel for ScaledKernel {
    fn p(&self) -> usize {
        self.inner.p()
    }
    fn dims(&self) -> Dims {
        self.inner.dims()
    }
    fn eval(&self, inv: &Invariants3) -> Result<DMatrix<f64>> {
        let mut k = self.inner.eval(inv)?;
        let p = k.nrows();
        for i in 0..p {
            for j in 0..p {
                k[(i, j)] *= self.scale[i] * self.scale[j];
            }
        }
        Ok(k)
    }
    fn family(&self) -> &'static str {
        self.inner.family()
    }
}

/// Entrywise `sigma_i sigma_j K_ij`.
pub fn apply_variance(kernel: Arc<dyn MatrixKernel>, sigma: &VarianceScaling) -> Result<ScaledKernel> {
    if sigma.0.len() != kernel.p() {
        return Err(Error::dims(format!(
            "{} standard deviations for a kernel with p = {}",
            sigma.0.len(),
            kernel.p()
        )));
    }
    Ok(ScaledKernel {
        inner: kernel,
        scale: sigma.0.clone(),
    })
}

/// Rescales to `K_ij / sqrt(K_ii(1,1,0) K_jj(1,1,0))`.
pub fn normalize(kernel: Arc<dyn MatrixKernel>) -> Result<ScaledKernel> {
    let k0 = kernel.eval(&Invariants3::ORIGIN)?;
    let scale = (0..kernel.p())
        .map(|i| {
            let c = k0[(i, i)];
            if c > 0.0 && c.is_finite() {
                Ok(1.0 / c.sqrt())
            } else {
                Err(Error::invalid(format!("diagonal entry {i} at the origin is {c}, not positive")))
            }
        })
        .collect::<Result<_>>()?;
    Ok(ScaledKernel { inner: kernel, scale })
}

type EvalFn = dyn Fn(&Invariants3) -> Result<DMatrix<f64>> + Send + Sync;

/// A kernel given by an arbitrary closure; used for user-supplied and planted test kernels.
pub struct FnKernel {
    p: usize,
    dims: Dims,
    f: Box<EvalFn>,
}

impl FnKernel {
    pub fn new(
        p: usize,
        dims: Dims,
        f: impl Fn(&Invariants3) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        FnKernel { p, dims, f: Box::new(f) }
    }
}

impl Debug for FnKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnKernel").field("p", &self.p).field("dims", &self.dims).finish()
    }
}

impl MatrixKernel for FnKernel {
    fn p(&self) -> usize {
        self.p
    }
    fn dims(&self) -> Dims {
        self.dims
    }
    fn eval(&self, inv: &Invariants3) -> Result<DMatrix<f64>> {
        (self.f)(inv)
    }
}

/// Checks a square symmetric PSD coefficient matrix of size `p`.
pub(crate) fn check_psd(name: &str, m: &DMatrix<f64>, p: usize, tol: f64) -> Result<()> {
    if m.shape() != (p, p) {
        return Err(Error::dims(format!("{name} is {:?}, expected {p}x{p}", m.shape())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name} has non-finite entries")));
    }
    let scale = m.amax().max(1.0);
    if crate::linalg::asymmetry(m) > 1e-12 * scale {
        return Err(Error::invalid(format!("{name} is not symmetric")));
    }
    let min = crate::linalg::symmetric_eigenvalues(m)?.min();
    if min < -tol * scale {
        return Err(Error::invalid(format!(
            "{name} is not positive semidefinite (smallest eigenvalue {min:e})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::random_sites;

    fn constant(m: DMatrix<f64>) -> FnKernel {
        let p = m.nrows();
        FnKernel::new(p, Dims::new(1, 2, 1).unwrap(), move |_| Ok(m.clone()))
    }

    #[test]
    fn gram_layout_and_symmetry() {
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let k = constant(b.clone());
        let sites = random_sites(1, 3, k.dims, 1.0);
        let g = gram(&k, &sites).unwrap();
        assert_eq!(g.shape(), (6, 6));
        assert_eq!(g, g.transpose());
        assert_eq!(g[(2, 5)], 0.5);
        assert_eq!(g[(4, 4)], 2.0);
    }

    #[test]
    fn variance_and_normalize() {
        let b = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 9.0]);
        let k: Arc<dyn MatrixKernel> = Arc::new(constant(b));
        let n = normalize(k.clone()).unwrap();
        let v = n.eval(&Invariants3::ORIGIN).unwrap();
        assert!((v[(0, 0)] - 1.0).abs() < 1e-12 && (v[(1, 1)] - 1.0).abs() < 1e-12);
        assert!((v[(0, 1)] - 1.0 / 6.0).abs() < 1e-12);

        let s = apply_variance(k.clone(), &VarianceScaling::new(vec![2.0, 3.0]).unwrap()).unwrap();
        assert_eq!(s.eval(&Invariants3::ORIGIN).unwrap()[(0, 1)], 6.0);
        let ones = apply_variance(k.clone(), &VarianceScaling::new(vec![1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(ones.eval(&Invariants3::ORIGIN).unwrap(), k.eval(&Invariants3::ORIGIN).unwrap());
        assert!(VarianceScaling::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn normalize_rejects_nonpositive_diagonal() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(normalize(Arc::new(constant(b))).is_err());
    }
}
