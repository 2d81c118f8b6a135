//! Modified Bessel function of the second kind and the Matérn correlation.
//!
//! `K_mu` and `K_{mu+1}` for `|mu| <= 1/2` come from Temme's series when
//! `x < 2` and from Steed's continued fraction (CF2) otherwise; integer
//! offsets are reached by forward recurrence, which is stable for `K`.
//! Half-integer orders use the terminating closed form.

use std::f64::consts::{LN_2, PI};

use super::gamma::log_gamma;
use crate::error::{Error, Result};

// Chebyshev coefficients of g1, g2 in Temme's series on [-1, 1] (variable 4|mu| - 1).
const G1_CHEB: [f64; 14] = [
    -1.145_164_083_662_683_1,
    0.006_360_853_113_470_843,
    0.001_862_451_930_072_068_5,
    0.000_152_833_085_873_453_5,
    0.000_017_017_464_011_802_04,
    -6.459_750_292_334_725e-7,
    -5.181_984_843_251_938e-8,
    4.518_909_289_485_818e-10,
    3.243_322_737_102_087e-11,
    6.830_943_402_494_752e-13,
    2.835_350_275_517_210e-14,
    -7.988_390_576_932_359e-16,
    -3.372_667_730_077_195e-17,
    -3.658_633_480_921_052e-20,
];

const G2_CHEB: [f64; 15] = [
    1.882_645_524_949_671_8,
    -0.077_490_658_396_167_52,
    -0.018_256_714_847_324_93,
    0.000_633_803_020_907_489_6,
    0.000_076_229_054_350_872_9,
    -9.550_164_756_172_044e-7,
    -8.892_726_810_788_635e-8,
    -1.952_133_477_231_961e-9,
    -9.400_305_273_588_516e-11,
    4.687_513_384_953_239e-12,
    2.265_853_574_692_576e-13,
    -1.172_550_969_848_801_5e-15,
    -7.044_133_820_024_522e-17,
    -2.437_787_831_010_769e-18,
    -7.522_524_321_825_390e-20,
];

const MAX_ITER: usize = 20_000;
const RESCALE: f64 = 1e250;

fn cheb_eval(coeffs: &[f64], y: f64) -> f64 {
    let y2 = 2.0 * y;
    let (mut d, mut dd) = (0.0, 0.0);
    for &c in coeffs[1..].iter().rev() {
        let tmp = d;
        d = y2 * d - dd + c;
        dd = tmp;
    }
    y * d - dd + 0.5 * coeffs[0]
}

/// `(Gamma(1 + mu), Gamma(1 - mu), g1, g2)` for `|mu| <= 1/2`, where
/// `g1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)` and
/// `g2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2`.
fn temme_gamma(mu: f64) -> (f64, f64, f64, f64) {
    let y = 4.0 * mu.abs() - 1.0;
    let g1 = cheb_eval(&G1_CHEB, y);
    let g2 = cheb_eval(&G2_CHEB, y);
    (1.0 / (g2 - mu * g1), 1.0 / (g2 + mu * g1), g1, g2)
}

/// Scaled `e^x K_mu(x)` and `e^x K_{mu+1}(x)` by Temme's series, `x < 2`.
fn k_scaled_temme(mu: f64, x: f64) -> Result<(f64, f64)> {
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let half_x_mu = (mu * ln_half_x).exp();
    let pi_mu = PI * mu;
    let sigma = -mu * ln_half_x;
    let sinrat = if pi_mu.abs() < f64::EPSILON { 1.0 } else { pi_mu / pi_mu.sin() };
    let sinhrat = if sigma.abs() < f64::EPSILON { 1.0 } else { sigma.sinh() / sigma };
    let (g_1pmu, g_1mmu, g1, g2) = temme_gamma(mu);

    let mut fk = sinrat * (sigma.cosh() * g1 - sinhrat * ln_half_x * g2);
    let mut pk = 0.5 / half_x_mu * g_1pmu;
    let mut qk = 0.5 * half_x_mu * g_1mmu;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = pk;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        fk = (kf * fk + pk + qk) / (kf * kf - mu * mu);
        ck *= half_x * half_x / kf;
        pk /= kf - mu;
        qk /= kf + mu;
        let hk = -kf * fk + pk;
        let del0 = ck * fk;
        let del1 = ck * hk;
        sum0 += del0;
        sum1 += del1;
        if del0.abs() < 0.5 * sum0.abs() * f64::EPSILON && del1.abs() < 0.5 * sum1.abs() * f64::EPSILON {
            let ex = x.exp();
            return Ok((sum0 * ex, sum1 * 2.0 / x * ex));
        }
    }
    Err(Error::NoConvergence(format!("Temme series for K_{mu}({x})")))
}

/// Scaled `e^x K_mu(x)` and `e^x K_{mu+1}(x)` by Steed's CF2, `x >= 2`.
fn k_scaled_cf2(mu: f64, x: f64) -> Result<(f64, f64)> {
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;
    let mut qi = 0.0;
    let mut qip1 = 1.0;
    let mut ai = -(0.25 - mu * mu);
    let a1 = ai;
    let mut ci = -ai;
    let mut bqi = -ai;
    let mut s = 1.0 + bqi * delhi;
    let mut converged = false;
    for i in 2..MAX_ITER {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        bqi += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi = (bi * di - 1.0) * delhi;
        hi += delhi;
        let dels = bqi * delhi;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("CF2 for K_{mu}({x})")));
    }
    hi *= -a1;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mup1 = k_mu * (mu + x + 0.5 - hi) / x;
    Ok((k_mu, k_mup1))
}

/// Half-integer order `n + 1/2`: `e^x K = sqrt(pi / 2x) sum_k (n+k)! / (k! (n-k)!) (2x)^{-k}`.
fn k_scaled_half_integer(n: usize, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=n {
        let kf = k as f64;
        term *= (n as f64 + kf) * (n as f64 - kf + 1.0) / (kf * 2.0 * x);
        sum += term;
    }
    (PI / (2.0 * x)).sqrt() * sum
}

/// `e^x K_nu(x)` as `mantissa * exp(ln_scale)`.
fn k_scaled_parts(nu: f64, x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("bessel_k", format!("x = {x} must be positive")));
    }
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::domain("bessel_k", format!("order nu = {nu} must be >= 0")));
    }
    if nu - nu.floor() == 0.5 {
        let v = k_scaled_half_integer(nu.floor() as usize, x);
        if v.is_finite() {
            return Ok((v, 0.0));
        }
    }
    let n = (nu + 0.5).floor() as usize;
    let mu = nu - n as f64;
    let (k_mu, k_mup1) = if x < 2.0 {
        k_scaled_temme(mu, x)?
    } else {
        k_scaled_cf2(mu, x)?
    };
    let mut ln_scale = 0.0;
    let mut k_cur = k_mu;
    let mut k_next = k_mup1;
    for j in 0..n {
        let mut k_prev = k_cur;
        k_cur = k_next;
        if k_cur.abs() > RESCALE {
            k_prev /= RESCALE;
            k_cur /= RESCALE;
            ln_scale += RESCALE.ln();
        }
        k_next = 2.0 * (mu + j as f64 + 1.0) / x * k_cur + k_prev;
    }
    Ok((k_cur, ln_scale))
}

/// `ln K_nu(x)` for `nu >= 0`, `x > 0`; finite even where `K_nu` over- or underflows.
pub fn ln_bessel_k(nu: f64, x: f64) -> Result<f64> {
    let (m, ln_scale) = k_scaled_parts(nu, x)?;
    Ok(m.ln() + ln_scale - x)
}

/// Exponentially scaled `e^x K_nu(x)`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> Result<f64> {
    let (m, ln_scale) = k_scaled_parts(nu, x)?;
    Ok(m * ln_scale.exp())
}

/// Modified Bessel function of the second kind `K_nu(x)`, `x > 0`.
pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    let nu = nu.abs();
    Ok(ln_bessel_k(nu, x)?.exp())
}

/// Matérn correlation `2^{1-nu} / Gamma(nu) (alpha h)^nu K_nu(alpha h)`, equal to 1 at `h = 0`.
///
/// Returns NaN when `alpha` or `nu` is not strictly positive.
pub fn matern(h: f64, alpha: f64, nu: f64) -> f64 {
    if !(alpha > 0.0 && nu > 0.0) {
        return f64::NAN;
    }
    let x = alpha * h.abs();
    if x == 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let ln_k = match ln_bessel_k(nu, x) {
        Ok(v) => v,
        Err(_) => return f64::NAN,
    };
    let ln_gamma_nu = match log_gamma(nu) {
        Ok(v) => v,
        Err(_) => return f64::NAN,
    };
    ((1.0 - nu) * LN_2 - ln_gamma_nu + nu * x.ln() + ln_k).exp().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt`, trapezoid rule in log space.
    fn k_integral(nu: f64, x: f64) -> f64 {
        let step = 0.01;
        let lnterm = |t: f64| -x * t.cosh() + nu * t + (0.5 * (1.0 + (-2.0 * nu * t).exp())).ln();
        let (i_peak, peak) = (0..40_000)
            .map(|i| (i, lnterm(i as f64 * step)))
            .fold((0, f64::MIN), |acc, v| if v.1 > acc.1 { v } else { acc });
        let mut sum = 0.5 * (lnterm(0.0) - peak).exp();
        let mut i = 1;
        loop {
            let v = (lnterm(i as f64 * step) - peak).exp();
            sum += v;
            if v < 1e-20 && i > i_peak {
                break;
            }
            i += 1;
        }
        (sum * step).ln() + peak
    }

    #[test]
    fn half_integer_closed_forms() {
        let e1 = (-1f64).exp();
        assert_relative_eq!(bessel_k(0.5, 1.0).unwrap(), (PI / 2.0).sqrt() * e1, max_relative = 1e-14);
        assert_relative_eq!(bessel_k(1.5, 1.0).unwrap(), (PI / 2.0).sqrt() * e1 * 2.0, max_relative = 1e-14);
    }

    #[test]
    fn upward_recurrence_oracle() {
        let x: f64 = 2.0;
        let k05 = (PI / (2.0 * x)).sqrt() * (-x).exp();
        let k15 = k05 * (1.0 + 1.0 / x);
        let k25 = k05 + (2.0 * 1.5 / x) * k15;
        assert_relative_eq!(bessel_k(2.5, x).unwrap(), k25, max_relative = 1e-13);
    }

    #[test]
    fn agrees_with_integral_representation() {
        for &nu in &[0.05, 0.3, 0.5, 1.0, 1.37, 2.0, 3.8, 7.25, 12.0, 20.0] {
            for &x in &[1e-8, 1e-4, 0.03, 0.7, 1.99, 2.0, 5.5, 17.0, 50.0] {
                let got = ln_bessel_k(nu, x).unwrap();
                let want = k_integral(nu, x);
                assert!(
                    (got - want).abs() < 1e-10,
                    "nu={nu} x={x}: ln K = {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(bessel_k(1.0, 0.0).is_err());
        assert!(bessel_k(1.0, -2.0).is_err());
    }

    #[test]
    fn matern_closed_forms() {
        assert_eq!(matern(0.0, 3.0, 0.7), 1.0);
        assert_relative_eq!(matern(2.0, 1.0, 0.5), (-2f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(matern(1.0, 1.0, 1.5), 2.0 * (-1f64).exp(), max_relative = 1e-13);
        let x: f64 = 1.3;
        assert_relative_eq!(
            matern(x, 1.0, 2.5),
            (1.0 + x + x * x / 3.0) * (-x).exp(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn matern_is_monotone_and_decays() {
        for &nu in &[0.2, 0.5, 1.0, 2.7, 9.0] {
            for &alpha in &[0.3, 1.0, 4.0] {
                let mut last = 1.0;
                for i in 1..400 {
                    let v = matern(i as f64 * 0.05, alpha, nu);
                    assert!(v <= last + 1e-15, "nu={nu} alpha={alpha} i={i}");
                    last = v;
                }
                assert!(matern(1e3, alpha, nu) < 1e-100);
            }
        }
    }

    #[test]
    fn matern_near_origin_is_continuous() {
        for &nu in &[0.1, 0.5, 2.0, 15.0] {
            let v = matern(1e-12, 1.0, nu);
            assert!(v <= 1.0 && v > 0.9, "nu={nu} v={v}");
        }
    }
}
