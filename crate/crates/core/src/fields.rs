//! Gaussian random field simulation by Cholesky factorization, and simple kriging.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Site;
use crate::kernels::{cross_gram, gram, PairKernel};
use crate::linalg::symmetric_eigenvalues;
use crate::seeding::{child_seed, rng_from_seed};

/// Relative default jitter: `1e-10 * trace / (pN)`.
pub const DEFAULT_JITTER_REL: f64 = 1e-10;
/// Escalation stops once the jitter exceeds this fraction of the mean diagonal.
pub const JITTER_CAP_REL: f64 = 1e-3;

/// One realization: `values[(site, component)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub values: DMatrix<f64>,
    pub seed: u64,
}

impl FieldSample {
    /// Site-major flattening `site * p + component`, matching the Gram layout.
    pub fn flat(&self) -> DVector<f64> {
        let (n, p) = self.values.shape();
        DVector::from_fn(n * p, |i, _| self.values[(i / p, i % p)])
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub sites: Vec<Site>,
    pub samples: Vec<FieldSample>,
    /// Jitter actually added to the diagonal.
    pub jitter: f64,
    /// Number of times the jitter was multiplied by 10.
    pub escalations: usize,
}

/// Cholesky factor of `m + jitter I`, escalating the jitter by factors of 10 up to the cap.
pub fn factorize(m: &DMatrix<f64>, jitter: Option<f64>) -> Result<(Cholesky<f64, Dyn>, f64, usize)> {
    let n = m.nrows();
    if n == 0 {
        return Err(Error::invalid("cannot factorize an empty matrix"));
    }
    let mean_diag = m.trace() / n as f64;
    let default = DEFAULT_JITTER_REL * mean_diag.abs();
    let cap = JITTER_CAP_REL * mean_diag.abs();
    let mut jit = jitter.unwrap_or(default).max(0.0);
    let mut escalations = 0;
    loop {
        let shifted = m + DMatrix::identity(n, n) * jit;
        if let Some(ch) = Cholesky::new(shifted) {
            if escalations > 0 {
                log::warn!("Cholesky needed jitter {jit:e} after {escalations} escalations");
            }
            return Ok((ch, jit, escalations));
        }
        if jit == 0.0 {
            jit = default.max(f64::MIN_POSITIVE);
        } else {
            jit *= 10.0;
        }
        escalations += 1;
        if jit > cap {
            let min = symmetric_eigenvalues(m).map(|e| e.min()).unwrap_or(f64::NAN);
            return Err(Error::Linalg(format!(
                "Cholesky failed up to jitter cap {cap:e}; minimum eigenvalue {min:e}"
            )));
        }
    }
}

/// `n_samples` zero-mean realizations `L eps` at `sites`; sample `i` uses stream `child_seed(seed, i)`.
pub fn simulate<K: PairKernel + ?Sized>(
    kernel: &K,
    sites: &[Site],
    n_samples: usize,
    seed: u64,
    jitter: Option<f64>,
) -> Result<Simulation> {
    let p = kernel.components();
    let n = sites.len();
    if n_samples == 0 {
        return Ok(Simulation {
            sites: sites.to_vec(),
            samples: Vec::new(),
            jitter: 0.0,
            escalations: 0,
        });
    }
    let g = gram(kernel, sites)?;
    let (chol, jit, escalations) = factorize(&g, jitter)?;
    let l = chol.l();
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let s = child_seed(seed, i as u64);
            let mut rng = rng_from_seed(s);
            let eps = DVector::from_fn(n * p, |_, _| StandardNormal.sample(&mut rng));
            let z = &l * eps;
            FieldSample {
                values: DMatrix::from_fn(n, p, |a, c| z[a * p + c]),
                seed: s,
            }
        })
        .collect();
    Ok(Simulation {
        sites: sites.to_vec(),
        samples,
        jitter: jit,
        escalations,
    })
}

/// Unbiased sample covariance of the flattened samples.
pub fn empirical_covariance(samples: &[FieldSample]) -> Result<DMatrix<f64>> {
    if samples.len() < 2 {
        return Err(Error::invalid("empirical covariance needs at least two samples"));
    }
    let flats: Vec<DVector<f64>> = samples.iter().map(FieldSample::flat).collect();
    let dim = flats[0].len();
    if flats.iter().any(|f| f.len() != dim) {
        return Err(Error::dims("samples have different shapes"));
    }
    let m = flats.len() as f64;
    let mean = flats.iter().fold(DVector::zeros(dim), |acc, f| acc + f) / m;
    let mut cov = DMatrix::zeros(dim, dim);
    for f in &flats {
        let c = f - &mean;
        cov.ger(1.0, &c, &c, 1.0);
    }
    Ok(cov / (m - 1.0))
}

#[derive(Debug, Clone)]
pub struct Kriging {
    /// `predictions[(query, component)]`
    pub predictions: DMatrix<f64>,
    /// Predictive variances, same layout.
    pub variances: DMatrix<f64>,
}

/// Simple kriging: `K_*^T (K + noise I)^{-1} y` and `diag(K_** - K_*^T (K + noise I)^{-1} K_*)`.
///
/// `obs_values[(site, component)]`.
pub fn krige<K: PairKernel + ?Sized>(
    kernel: &K,
    obs_sites: &[Site],
    obs_values: &DMatrix<f64>,
    noise: f64,
    query_sites: &[Site],
) -> Result<Kriging> {
    let p = kernel.components();
    let n = obs_sites.len();
    if obs_values.shape() != (n, p) {
        return Err(Error::dims(format!(
            "observations are {:?}, expected {n}x{p}",
            obs_values.shape()
        )));
    }
    if !(noise >= 0.0) {
        return Err(Error::invalid(format!("noise = {noise} must be >= 0")));
    }
    let k = gram(kernel, obs_sites)? + DMatrix::identity(n * p, n * p) * noise;
    let chol = Cholesky::new(k)
        .ok_or_else(|| Error::Linalg("observation covariance is singular; add noise".into()))?;
    let ks = cross_gram(kernel, obs_sites, query_sites)?;
    let y = DVector::from_fn(n * p, |i, _| obs_values[(i / p, i % p)]);
    let pred = ks.transpose() * chol.solve(&y);
    let mut v = ks.clone();
    chol.l().solve_lower_triangular_mut(&mut v);

    let m = query_sites.len();
    let mut predictions = DMatrix::zeros(m, p);
    let mut variances = DMatrix::zeros(m, p);
    for q in 0..m {
        let kqq = kernel.eval_pair(&query_sites[q], &query_sites[q])?;
        for c in 0..p {
            let col = q * p + c;
            predictions[(q, c)] = pred[col];
            let mut var = kqq[(c, c)] - v.column(col).norm_squared();
            if var < 0.0 {
                if var < -1e-8 * kqq[(c, c)].abs().max(1.0) {
                    log::warn!("predictive variance {var:e} at query {q}, component {c} clamped to 0");
                }
                var = 0.0;
            }
            variances[(q, c)] = var;
        }
    }
    Ok(Kriging { predictions, variances })
}
