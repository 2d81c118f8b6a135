//! Gauss–Jacobi quadrature by the Golub–Welsch algorithm.

use nalgebra::{DMatrix, SymmetricEigen};

use super::gamma::log_gamma;
use crate::error::{Error, Result};

/// Nodes and positive weights of an `m`-point Gauss rule for the weight
/// `(1 - t)^alpha (1 + t)^beta` on `(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Exponent of the symmetric weight `(1 - t^2)^exponent`, if the rule is symmetric.
    pub fn exponent(&self) -> Option<f64> {
        (self.alpha == self.beta).then_some(self.alpha)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `m`-point rule for `(1 - t)^alpha (1 + t)^beta`, exact to degree `2m - 1`.
pub fn gauss_jacobi_rule_general(m: usize, alpha: f64, beta: f64) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(Error::domain("gauss_jacobi_rule", "m must be at least 1"));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(Error::domain(
            "gauss_jacobi_rule",
            format!("exponents ({alpha}, {beta}) must exceed -1"),
        ));
    }
    let s = alpha + beta;
    let ln_mu0 = (s + 1.0) * std::f64::consts::LN_2 + log_gamma(alpha + 1.0)? + log_gamma(beta + 1.0)?
        - log_gamma(s + 2.0)?;
    let mu0 = ln_mu0.exp();

    let mut jac = DMatrix::<f64>::zeros(m, m);
    for k in 0..m {
        let kf = k as f64;
        jac[(k, k)] = if k == 0 {
            (beta - alpha) / (s + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * kf + s) * (2.0 * kf + s + 2.0))
        };
        if k + 1 < m {
            let j = kf + 1.0;
            let b = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + s).powi(2) * (3.0 + s))
            } else {
                let t = 2.0 * j + s;
                4.0 * j * (j + alpha) * (j + beta) * (j + s) / (t * t * (t + 1.0) * (t - 1.0))
            };
            let off = b.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }

    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    Ok(QuadratureRule {
        nodes,
        weights,
        alpha,
        beta,
    })
}

/// `m`-point rule for `(1 - t^2)^exponent`; nodes and weights are exactly symmetric about 0.
pub fn gauss_jacobi_rule(m: usize, exponent: f64) -> Result<QuadratureRule> {
    let mut rule = gauss_jacobi_rule_general(m, exponent, exponent)?;
    let (nodes, weights) = (rule.nodes.clone(), rule.weights.clone());
    for i in 0..m {
        let j = m - 1 - i;
        rule.nodes[i] = 0.5 * (nodes[i] - nodes[j]);
        rule.weights[i] = 0.5 * (weights[i] + weights[j]);
    }
    if m % 2 == 1 {
        rule.nodes[m / 2] = 0.0;
    }
    Ok(rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::{beta_fn, gegenbauer_normalized};
    use approx::assert_abs_diff_eq;

    #[test]
    fn midpoint_rule() {
        let r = gauss_jacobi_rule(1, 0.0).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert_abs_diff_eq!(r.weights[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn legendre_exactness() {
        let r = gauss_jacobi_rule(3, 0.0).unwrap();
        assert_abs_diff_eq!(r.integrate(|t| t.powi(4)), 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(r.integrate(|t| t.powi(5)), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn weight_sums_match_beta_function() {
        for &e in &[-0.5, -0.25, 0.0, 0.5, 1.0, 3.5, 9.0] {
            for &m in &[1, 2, 8, 33, 64] {
                let r = gauss_jacobi_rule(m, e).unwrap();
                let want = beta_fn(e + 1.0, 0.5).unwrap();
                assert_abs_diff_eq!(r.weights.iter().sum::<f64>(), want, epsilon = 1e-10);
            }
        }
        let r = gauss_jacobi_rule(8, 0.5).unwrap();
        assert_abs_diff_eq!(r.weights.iter().sum::<f64>(), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn nodes_increasing_and_symmetric() {
        let r = gauss_jacobi_rule(64, 0.5).unwrap();
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(r.nodes.iter().all(|t| t.abs() < 1.0));
        assert!(r.weights.iter().all(|&w| w > 0.0));
        for i in 0..64 {
            assert_abs_diff_eq!(r.nodes[i], -r.nodes[63 - i], epsilon = 1e-12);
        }
    }

    #[test]
    fn gegenbauer_orthogonality() {
        for n in 2..=5u32 {
            let r = gauss_jacobi_rule(64, n as f64 / 2.0 - 1.0).unwrap();
            for k in 0..=6 {
                for l in 0..=6 {
                    if k == l {
                        continue;
                    }
                    let v = r.integrate(|t| gegenbauer_normalized(n, k, t) * gegenbauer_normalized(n, l, t));
                    assert_abs_diff_eq!(v, 0.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn asymmetric_rule_moments() {
        // int_{-1}^{1} (1-t)^a (1+t)^b t dt = mu0 (b - a) / (a + b + 2)
        let (a, b) = (0.7, -0.4);
        let r = gauss_jacobi_rule_general(20, a, b).unwrap();
        let mu0 = 2f64.powf(a + b + 1.0) * beta_fn(a + 1.0, b + 1.0).unwrap();
        assert_abs_diff_eq!(r.weights.iter().sum::<f64>(), mu0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.integrate(|t| t), mu0 * (b - a) / (a + b + 2.0), epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(gauss_jacobi_rule(0, 0.0).is_err());
        assert!(gauss_jacobi_rule(4, -1.0).is_err());
    }
}
