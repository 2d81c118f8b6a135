//! Numerical audits of positive definiteness and conditional negative definiteness.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{random_sites, reduce, Dims, Invariants3};
use crate::kernels::{gram, MaternSpectralKernel, PairKernel};
use crate::linalg::{block_contrasts, eig_ratio, symmetric_eigenvalues};
use crate::seeding::child_seed;

/// Default tolerance on `lambda_min / max |lambda|`.
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_TOL_MATERN: f64 = 1e-8;
/// Half-width of the Euclidean box sites are drawn from.
pub const DEFAULT_BOX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub index: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub stage: String,
    pub min_eig_ratio: f64,
    pub n_trials: usize,
    pub worst_trial_seed: Option<u64>,
    pub violations: Vec<Violation>,
    pub tolerance: f64,
    pub passed: bool,
}

impl AuditReport {
    /// Aggregates per-trial `(seed, label, ratio)` records; passes iff the worst ratio is `>= -tol`.
    pub fn from_trials(stage: &str, trials: Vec<(Option<u64>, String, f64)>, tol: f64) -> Self {
        let mut min_eig_ratio = f64::INFINITY;
        let mut worst_trial_seed = None;
        let mut violations = Vec::new();
        for (t, (seed, label, ratio)) in trials.iter().enumerate() {
            if *ratio < min_eig_ratio || ratio.is_nan() {
                min_eig_ratio = *ratio;
                worst_trial_seed = *seed;
            }
            if !(*ratio >= -tol) {
                violations.push(Violation {
                    trial: t,
                    index: label.clone(),
                    ratio: *ratio,
                });
            }
        }
        if trials.is_empty() {
            min_eig_ratio = 0.0;
        }
        AuditReport {
            stage: stage.to_string(),
            min_eig_ratio,
            n_trials: trials.len(),
            worst_trial_seed,
            passed: violations.is_empty(),
            violations,
            tolerance: tol,
        }
    }

    pub fn summary(&self) -> String {
        format!(
            "{:<28} {:>6} trials  min eig ratio {:>12.4e}  tol {:.1e}  {}",
            self.stage,
            self.n_trials,
            self.min_eig_ratio,
            self.tolerance,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

/// `lambda_min / max |lambda|` of a symmetric matrix.
pub fn psd_ratio(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eig_ratio(&symmetric_eigenvalues(m)?, 0.0))
}

/// Gram eigen-audit over `n_trials` random designs of `n_sites` sites in the default box.
pub fn pd_audit<K: PairKernel + ?Sized>(kernel: &K, n_sites: usize, n_trials: usize, seed: u64, tol: f64) -> Result<AuditReport> {
    pd_audit_in_box(kernel, n_sites, n_trials, seed, tol, DEFAULT_BOX)
}

pub fn pd_audit_in_box<K: PairKernel + ?Sized>(
    kernel: &K,
    n_sites: usize,
    n_trials: usize,
    seed: u64,
    tol: f64,
    box_halfwidth: f64,
) -> Result<AuditReport> {
    if n_sites == 0 {
        return Err(Error::invalid("pd_audit needs at least one site"));
    }
    let dims = kernel.domain();
    let trials = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let s = child_seed(seed, t as u64);
            let sites = random_sites(s, n_sites, dims, box_halfwidth);
            let g = gram(kernel, &sites)?;
            Ok((Some(s), "gram".to_string(), psd_ratio(&g)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditReport::from_trials("pd_audit", trials, tol))
}

/// Which sign of `gamma` is required to be conditionally negative definite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `gamma` itself is CND (a cross variogram).
    AsGiven,
    /// `-gamma` is CND.
    Negated,
}

/// Audits conditional negative definiteness of a matrix function `gamma(s, r, h)` in the
/// chosen orientation: the block matrix is projected onto block contrasts (site blocks
/// summing to the zero vector) and its largest eigenvalue must not exceed `tol` times
/// the spectral radius. The reported ratio is `-lambda_max(projected) / max |lambda|`.
#[allow(clippy::too_many_arguments)]
pub fn cnd_audit<F>(
    gamma: F,
    p: usize,
    dims: Dims,
    orientation: Orientation,
    n_sites: usize,
    n_trials: usize,
    seed: u64,
    tol: f64,
) -> Result<AuditReport>
where
    F: Fn(&Invariants3) -> Result<DMatrix<f64>> + Sync,
{
    if n_sites == 0 {
        return Err(Error::invalid("cnd_audit needs at least one site"));
    }
    let sign = match orientation {
        Orientation::AsGiven => 1.0,
        Orientation::Negated => -1.0,
    };
    let contrasts = block_contrasts(n_sites, p);
    let trials = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let s = child_seed(seed, t as u64);
            let sites = random_sites(s, n_sites, dims, DEFAULT_BOX);
            let mut m = DMatrix::zeros(n_sites * p, n_sites * p);
            for a in 0..n_sites {
                for b in a..n_sites {
                    let g = gamma(&reduce(&sites[a], &sites[b])?)?;
                    if g.shape() != (p, p) {
                        return Err(Error::dims(format!("gamma returned {:?}, expected {p}x{p}", g.shape())));
                    }
                    for i in 0..p {
                        for j in 0..p {
                            let v = if a == b && j < i { g[(j, i)] } else { g[(i, j)] };
                            m[(a * p + i, b * p + j)] = sign * v;
                            m[(b * p + j, a * p + i)] = sign * v;
                        }
                    }
                }
            }
            let scale = symmetric_eigenvalues(&m)?.amax();
            if n_sites < 2 || scale == 0.0 {
                return Ok((Some(s), "contrasts".to_string(), 0.0));
            }
            let mut proj = contrasts.transpose() * &m * &contrasts;
            crate::linalg::symmetrize(&mut proj);
            let top = symmetric_eigenvalues(&proj)?.max();
            Ok((Some(s), "contrasts".to_string(), -top / scale))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditReport::from_trials("cnd_audit", trials, tol))
}

/// `0.05, 0.10, ..., 1.0`.
pub fn default_a_grid() -> Vec<f64> {
    (1..=20).map(|i| i as f64 * 0.05).collect()
}

/// 17 x 17 tensor grid of Chebyshev-Lobatto points `cos(i pi / 16)`.
pub fn default_sr_grid() -> Vec<(f64, f64)> {
    let nodes: Vec<f64> = (0..17)
        .map(|i| (i as f64 * std::f64::consts::PI / 16.0).cos())
        .collect();
    nodes.iter().flat_map(|&s| nodes.iter().map(move |&r| (s, r))).collect()
}

/// Eigen-audit of `[beta_ij a^{nu_ij(s, r)}]` over the `a` and `(s, r)` grids.
pub fn matern_condition_audit(
    kernel: &MaternSpectralKernel,
    a_grid: &[f64],
    sr_grid: &[(f64, f64)],
    tol: f64,
) -> Result<AuditReport> {
    let cells: Vec<(f64, f64, f64)> = a_grid
        .iter()
        .flat_map(|&a| sr_grid.iter().map(move |&(s, r)| (a, s, r)))
        .collect();
    let trials = cells
        .par_iter()
        .map(|&(a, s, r)| {
            let ratio = psd_ratio(&kernel.condition_matrix(a, s, r))?;
            Ok((None, format!("a={a:.3},s={s:.4},r={r:.4}"), ratio))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AuditReport::from_trials("matern_condition_audit", trials, tol))
}
