use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{circle_harmonic, kappa, torus_multiplicity, XiKernel};
use crate::error::{Error, Result};
use crate::geometry::{Site, UnitVector};
use crate::kernels::PairKernel;
use crate::seeding::{child_seed, rng_from_seed};
use crate::validation::{pd_audit, psd_ratio, AuditReport, DEFAULT_BOX};

/// Default angular node count `4 * max_degree + 16`.
pub fn default_nodes(max_degree: usize) -> usize {
    4 * max_degree + 16
}

fn check_nodes(q: usize, max_degree: usize) -> Result<()> {
    if q < 2 * max_degree + 8 {
        return Err(Error::invalid(format!(
            "{q} angular nodes too few for degree {max_degree} (need >= {})",
            2 * max_degree + 8
        )));
    }
    Ok(())
}

fn angles(q: usize) -> Vec<f64> {
    (0..q).map(|m| 2.0 * PI * m as f64 / q as f64).collect()
}

/// Column of `Y_{k,j}` in the circle basis table.
fn basis_col(k: usize, j: usize) -> usize {
    if k == 0 {
        0
    } else {
        2 * k - 1 + j
    }
}

/// Contracts the leading axis of `data` (length `q`) against `table` (`q x m`, row-major)
/// and moves the new axis to the back.
fn contract_rotate(data: &[f64], q: usize, table: &[f64], m: usize) -> Vec<f64> {
    let rest = data.len() / q;
    let mut out = vec![0.0; rest * m];
    for a in 0..q {
        let row = &table[a * m..(a + 1) * m];
        for (r, &x) in data[a * rest..(a + 1) * rest].iter().enumerate() {
            if x != 0.0 {
                for (o, &e) in out[r * m..(r + 1) * m].iter_mut().zip(row) {
                    *o += x * e;
                }
            }
        }
    }
    out
}

/// Harmonic coefficients up to degree `n` on every circle axis, one tensor per entry `(l, m)`.
struct Spectrum {
    p: usize,
    width: usize,
    entries: Vec<Vec<f64>>,
}

impl Spectrum {
    fn new<K: PairKernel + ?Sized>(kernel: &K, u: &[f64], v: &[f64], q: usize, n: usize) -> Result<Self> {
        let dims = kernel.domain();
        if dims.d1 != 1 || dims.d2 != 1 {
            return Err(Error::invalid("harmonic recovery needs a kernel on S^1 x S^1 x R^d"));
        }
        if u.len() != dims.d as usize || v.len() != dims.d as usize {
            return Err(Error::dims(format!("Euclidean points must have {} coordinates", dims.d)));
        }
        let p = kernel.components();
        let th = angles(q);
        let make = |w: &[f64]| -> Result<Vec<Site>> {
            th.iter()
                .flat_map(|&a| th.iter().map(move |&b| (a, b)))
                .map(|(a, b)| Site::new(UnitVector::from_angle(a), UnitVector::from_angle(b), w.to_vec()))
                .collect()
        };
        let (su, sv) = (make(u)?, make(v)?);
        let rows: Vec<Vec<DMatrix<f64>>> = su
            .par_iter()
            .map(|a| sv.iter().map(|b| kernel.eval_pair(a, b)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let width = 2 * n + 1;
        let mut table = vec![0.0; q * width];
        for (a, &t) in th.iter().enumerate() {
            for k in 0..=n {
                for j in 0..kappa(k) {
                    table[a * width + basis_col(k, j)] = circle_harmonic(k, j, t) / q as f64;
                }
            }
        }
        let entries = (0..p * p)
            .into_par_iter()
            .map(|e| {
                let mut data: Vec<f64> = rows.iter().flat_map(|r| r.iter().map(|m| m[(e / p, e % p)])).collect();
                for _ in 0..4 {
                    data = contract_rotate(&data, q, &table, width);
                }
                data
            })
            .collect();
        Ok(Spectrum { p, width, entries })
    }

    fn coefficient(&self, k1: usize, k2: usize, j: usize, j_prime: usize) -> DMatrix<f64> {
        let w = self.width;
        let (j1, j2) = (j / kappa(k2), j % kappa(k2));
        let (i1, i2) = (j_prime / kappa(k2), j_prime % kappa(k2));
        let idx = ((basis_col(k1, j1) * w + basis_col(k2, j2)) * w + basis_col(k1, i1)) * w + basis_col(k2, i2);
        DMatrix::from_fn(self.p, self.p, |l, c| self.entries[l * self.p + c][idx])
    }
}

/// One recovered coefficient `Upsilon_{k,J,J'}(u, u')`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredCoefficient {
    pub k1: usize,
    pub k2: usize,
    pub j: usize,
    pub j_prime: usize,
    pub matrix: DMatrix<f64>,
}

/// Harmonic projection of `kernel` at a single index by trapezoidal quadrature on `q` angles per circle.
#[allow(clippy::too_many_arguments)]
pub fn recover_upsilon<K: PairKernel + ?Sized>(
    kernel: &K,
    k1: usize,
    j: usize,
    k2: usize,
    j_prime: usize,
    u: &[f64],
    v: &[f64],
    q: usize,
) -> Result<DMatrix<f64>> {
    check_nodes(q, k1.max(k2))?;
    let m = torus_multiplicity(k1, k2);
    if j >= m || j_prime >= m {
        return Err(Error::invalid(format!("harmonic indices ({j}, {j_prime}) out of range for ({k1}, {k2})")));
    }
    let spec = Spectrum::new(kernel, u, v, q, k1.max(k2))?;
    Ok(spec.coefficient(k1, k2, j, j_prime))
}

/// Every coefficient with `k1 <= n.0`, `k2 <= n.1` from one angular grid.
pub fn recover_all<K: PairKernel + ?Sized>(
    kernel: &K,
    n: (usize, usize),
    u: &[f64],
    v: &[f64],
    q: usize,
) -> Result<Vec<RecoveredCoefficient>> {
    check_nodes(q, n.0.max(n.1))?;
    let spec = Spectrum::new(kernel, u, v, q, n.0.max(n.1))?;
    let mut out = Vec::new();
    for k1 in 0..=n.0 {
        for k2 in 0..=n.1 {
            let m = torus_multiplicity(k1, k2);
            for j in 0..m {
                for j_prime in 0..m {
                    out.push(RecoveredCoefficient {
                        k1,
                        k2,
                        j,
                        j_prime,
                        matrix: spec.coefficient(k1, k2, j, j_prime),
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub l: usize,
    pub m: usize,
    /// `S_N = sum_{max(k1, k2) <= N} sum_{J, J'} |Upsilon^{(l, m)}|^2` for `N = 0..=n_max`.
    pub partial_sums: Vec<f64>,
    pub increments: Vec<f64>,
    pub monotone: bool,
}

/// Partial sums of squared `(l, m)` entries of the recovered coefficients.
#[allow(clippy::too_many_arguments)]
pub fn square_summability_report<K: PairKernel + ?Sized>(
    kernel: &K,
    u: &[f64],
    v: &[f64],
    n_max: usize,
    q: usize,
    l: usize,
    m: usize,
) -> Result<DecayTable> {
    let p = kernel.components();
    if l >= p || m >= p {
        return Err(Error::invalid(format!("entry ({l}, {m}) outside a {p}x{p} kernel")));
    }
    let coeffs = recover_all(kernel, (n_max, n_max), u, v, q)?;
    let mut by_degree = vec![0.0; n_max + 1];
    for c in &coeffs {
        by_degree[c.k1.max(c.k2)] += c.matrix[(l, m)].powi(2);
    }
    let partial_sums: Vec<f64> = by_degree
        .iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect();
    let increments: Vec<f64> = by_degree.iter().skip(1).copied().collect();
    let monotone = partial_sums.windows(2).all(|w| w[1] >= w[0]);
    Ok(DecayTable {
        l,
        m,
        partial_sums,
        increments,
        monotone,
    })
}

/// `int int |K - K_{n1,n2}|_F^2` over the torus pair (probability measure) at fixed `(u, u')`.
pub fn l2_truncation_error(kernel: &XiKernel, n: (usize, usize), u: &[f64], v: &[f64], q: usize) -> Result<f64> {
    let (t1, t2) = kernel.truncation();
    check_nodes(q, t1.max(t2))?;
    let trunc = kernel.truncated(n.0, n.1);
    let th = angles(q);
    let pts: Vec<(f64, f64)> = th.iter().flat_map(|&a| th.iter().map(move |&b| (a, b))).collect();
    let total: f64 = pts
        .par_iter()
        .map(|&a| {
            pts.iter()
                .map(|&b| {
                    let full = kernel.eval_angles(a, u, b, v);
                    let diff = match &trunc {
                        Some(t) => full - t.eval_angles(a, u, b, v),
                        None => full,
                    };
                    diff.norm_squared()
                })
                .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .sum();
    Ok(total / (pts.len() * pts.len()) as f64)
}

/// `sum` of `|Upsilon_{k,J,J'}(u, u')|_F^2` over degrees outside `k1 <= n1, k2 <= n2`.
pub fn tail_coefficient_sum(kernel: &XiKernel, n: (usize, usize), u: &[f64], v: &[f64]) -> Result<f64> {
    let mut degrees: Vec<(usize, usize)> = kernel.terms().iter().map(|t| (t.k1, t.k2)).collect();
    degrees.sort_unstable();
    degrees.dedup();
    let mut sum = 0.0;
    for (k1, k2) in degrees.into_iter().filter(|&(a, b)| a > n.0 || b > n.1) {
        let m = torus_multiplicity(k1, k2);
        for jj in 0..m {
            for jp in 0..m {
                sum += kernel.upsilon(k1, k2, jj, jp, u, v)?.norm_squared();
            }
        }
    }
    Ok(sum)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiAuditReport {
    /// Per-degree PSD audit of the coefficient blocks over random Euclidean designs.
    pub coefficients: AuditReport,
    /// End-to-end Gram audit over random sites.
    pub assembled: AuditReport,
    pub passed: bool,
}

/// Two-level audit: each degree's block `[Upsilon_{k,J,J'}(u_a, u_b)]` over `(J, a, component)`,
/// then the assembled kernel.
pub fn xi_pd_audit(kernel: &XiKernel, n_points: usize, n_trials: usize, seed: u64, tol: f64) -> Result<XiAuditReport> {
    if n_points == 0 {
        return Err(Error::invalid("xi_pd_audit needs at least one point"));
    }
    let mut degrees: Vec<(usize, usize)> = kernel.terms().iter().map(|t| (t.k1, t.k2)).collect();
    degrees.sort_unstable();
    degrees.dedup();
    let p = kernel.p();
    let d = kernel.d() as usize;
    let trials = (0..n_trials)
        .into_par_iter()
        .map(|t| {
            let s = child_seed(seed, t as u64);
            let mut rng = rng_from_seed(s);
            let pts: Vec<Vec<f64>> = (0..n_points)
                .map(|_| (0..d).map(|_| rng.random_range(-DEFAULT_BOX..=DEFAULT_BOX)).collect())
                .collect();
            degrees
                .iter()
                .map(|&(k1, k2)| {
                    let m = torus_multiplicity(k1, k2);
                    let size = m * n_points * p;
                    let mut g = DMatrix::zeros(size, size);
                    for jj in 0..m {
                        for a in 0..n_points {
                            for jp in 0..m {
                                for b in 0..n_points {
                                    let ups = kernel.upsilon(k1, k2, jj, jp, &pts[a], &pts[b])?;
                                    let (r0, c0) = ((jj * n_points + a) * p, (jp * n_points + b) * p);
                                    g.view_mut((r0, c0), (p, p)).copy_from(&ups);
                                }
                            }
                        }
                    }
                    crate::linalg::symmetrize(&mut g);
                    Ok((Some(s), format!("k=({k1},{k2})"), psd_ratio(&g)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut coefficients = AuditReport::from_trials("xi_coefficient_audit", trials.into_iter().flatten().collect(), tol);
    coefficients.n_trials = n_trials;
    let mut assembled = pd_audit(kernel, n_points, n_trials, seed, tol)?;
    assembled.stage = "xi_assembled_audit".into();
    Ok(XiAuditReport {
        passed: coefficients.passed && assembled.passed,
        coefficients,
        assembled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::RadialProfile;
    use crate::nonstat::{GFunction, UpsilonForm, XiTerm};

    fn kernel(sign: f64) -> XiKernel {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.8]);
        XiKernel::new_unchecked(
            1,
            vec![
                XiTerm {
                    k1: 0,
                    k2: 0,
                    form: UpsilonForm::Radial { matrix: a.clone(), profile: RadialProfile::Exponential { alpha: 1.0 } },
                },
                XiTerm {
                    k1: 1,
                    k2: 0,
                    form: UpsilonForm::Separable {
                        matrix: a.clone() * (0.5 * sign),
                        g: vec![
                            GFunction::Sinusoid { axis: 0, frequency: 1.3, phase: 0.2, amplitude: 1.0 },
                            GFunction::GaussianBump { center: vec![0.1], width: 0.7, amplitude: 0.9 },
                        ],
                    },
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn recovers_known_coefficients() {
        let k = kernel(1.0);
        let (u, v) = ([0.4], [-0.3]);
        let rec = recover_all(&k, (2, 2), &u, &v, default_nodes(2)).unwrap();
        for c in rec {
            let want = k.upsilon(c.k1, c.k2, c.j, c.j_prime, &u, &v).unwrap();
            assert!((c.matrix - want).amax() < 1e-12, "({}, {}) {} {}", c.k1, c.k2, c.j, c.j_prime);
        }
        let single = recover_upsilon(&k, 1, 1, 0, 0, &u, &v, 12).unwrap();
        assert!((single - k.upsilon(1, 0, 1, 0, &u, &v).unwrap()).amax() < 1e-12);
        assert!(recover_upsilon(&k, 3, 0, 0, 0, &u, &v, 10).is_err());
    }

    #[test]
    fn audit_flags_sign_flip() {
        assert!(xi_pd_audit(&kernel(1.0), 6, 3, 7, 1e-8).unwrap().passed);
        let bad = xi_pd_audit(&kernel(-1.0), 6, 3, 7, 1e-8).unwrap();
        assert!(!bad.coefficients.passed);
        assert!(bad.coefficients.violations.iter().all(|v| v.index == "k=(1,0)"));
    }

    #[test]
    fn parseval() {
        let k = kernel(1.0);
        let (u, v) = ([0.4], [-0.3]);
        for n in [(0, 0), (1, 0), (0, 1)] {
            let l2 = l2_truncation_error(&k, n, &u, &v, 16).unwrap();
            let tail = tail_coefficient_sum(&k, n, &u, &v).unwrap();
            assert!((l2 - tail).abs() < 1e-12, "{n:?}: {l2} vs {tail}");
        }
    }
}
