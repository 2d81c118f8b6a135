//! Gauss hypergeometric function `2F1(a, b; c; z)` for real arguments, `z <= 1`.

use super::gamma::{digamma, gamma, rgamma};
use crate::error::{Error, Result};

const MAX_TERMS: usize = 100_000;
/// Below this distance from an integer, `c - a - b` is treated through interpolation.
const NEAR_INTEGER: f64 = 1e-5;
const INTERP_STEP: f64 = 1e-4;

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x.fract() == 0.0
}

/// Defining power series; used when it converges quickly or terminates.
fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term == 0.0 || (term.abs() <= f64::EPSILON * sum.abs() && n > 2) {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence(format!("2F1({a}, {b}; {c}; {z}) series")))
}

/// `Gamma(c) Gamma(c-a-b) / (Gamma(c-a) Gamma(c-b))`, the value at `z = 1`.
fn gauss_sum(a: f64, b: f64, c: f64) -> Result<f64> {
    Ok(gamma(c)? * gamma(c - a - b)? * rgamma(c - a) * rgamma(c - b))
}

/// Connection to `1 - z` for non-integer `m = c - a - b`.
fn connection_generic(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let m = c - a - b;
    let w = 1.0 - z;
    let gc = gamma(c)?;
    let t1 = gc * gamma(m)? * rgamma(c - a) * rgamma(c - b) * series(a, b, 1.0 - m, w)?;
    let t2 = w.powf(m) * gc * gamma(-m)? * rgamma(a) * rgamma(b) * series(c - a, c - b, m + 1.0, w)?;
    Ok(t1 + t2)
}

/// Connection to `1 - z` for integer `m = c - a - b >= 0` (logarithmic case).
fn connection_integer(a: f64, b: f64, m: usize, z: f64) -> Result<f64> {
    let mf = m as f64;
    let c = a + b + mf;
    let w = 1.0 - z;

    let mut finite = 0.0;
    if m > 0 {
        let mut term = 1.0;
        for n in 0..m {
            let nf = n as f64;
            finite += term;
            term *= (a + nf) * (b + nf) / ((nf + 1.0) * (1.0 - mf + nf)) * w;
        }
        // Gamma(m) = (m-1)!
        let fact: f64 = (1..m).map(|i| i as f64).product();
        finite *= fact * gamma(c)? * rgamma(a + mf) * rgamma(b + mf);
    }

    let pre = gamma(c)? * rgamma(a) * rgamma(b);
    if pre == 0.0 {
        return Ok(finite);
    }
    let ln_w = w.ln();
    let mut psi_n1 = digamma(1.0);
    let mut psi_nm1 = digamma(mf + 1.0);
    let mut psi_a = digamma(a + mf);
    let mut psi_b = digamma(b + mf);
    // (a+m)_n (b+m)_n / (n! (n+m)!) w^n, starting at 1/m!
    let mut coef = 1.0 / (1..=m).map(|i| i as f64).product::<f64>();
    let mut sum = 0.0;
    let mut converged = false;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        let term = coef * (ln_w - psi_n1 - psi_nm1 + psi_a + psi_b);
        sum += term;
        if n > 2 && term.abs() <= f64::EPSILON * sum.abs() {
            converged = true;
            break;
        }
        coef *= (a + mf + nf) * (b + mf + nf) / ((nf + 1.0) * (nf + mf + 1.0)) * w;
        psi_n1 += 1.0 / (nf + 1.0);
        psi_nm1 += 1.0 / (nf + mf + 1.0);
        psi_a += 1.0 / (a + mf + nf);
        psi_b += 1.0 / (b + mf + nf);
    }
    if !converged {
        return Err(Error::NoConvergence(format!("2F1 logarithmic connection at z = {z}")));
    }
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    Ok(finite - sign * w.powi(m as i32) * pre * sum)
}

/// `0.75 < z < 1`, neither `a` nor `b` a nonpositive integer.
fn near_one(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    let m = c - a - b;
    let m0 = m.round();
    if m0 < 0.0 && (m - m0).abs() < 0.5 {
        // Euler: (1-z)^{c-a-b} 2F1(c-a, c-b; c; z) flips the sign of m.
        return Ok((1.0 - z).powf(m) * near_one(c - a, c - b, c, z)?);
    }
    let dist = (m - m0).abs();
    if dist == 0.0 {
        return connection_integer(a, b, m0 as usize, z);
    }
    if dist < NEAR_INTEGER {
        // Quadratic interpolation in c through m0 - h, m0, m0 + h.
        let h = INTERP_STEP;
        let c0 = a + b + m0;
        let f0 = connection_integer(a, b, m0 as usize, z)?;
        let fp = connection_generic(a, b, c0 + h, z)?;
        let fm = if m0 >= 1.0 {
            connection_generic(a, b, c0 - h, z)?
        } else {
            // m0 = 0: c0 - h sits at m = -h, handled via Euler.
            (1.0 - z).powf(-h) * connection_generic(c0 - h - a, c0 - h - b, c0 - h, z)?
        };
        let t = (c - c0) / h;
        return Ok(f0 + 0.5 * t * (fp - fm) + 0.5 * t * t * (fp - 2.0 * f0 + fm));
    }
    connection_generic(a, b, c, z)
}

/// Gauss hypergeometric function `2F1(a, b; c; z)` for real `z <= 1`.
///
/// At `z = 1` the value exists only when `c - a - b > 0`.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if ![a, b, c, z].iter().all(|v| v.is_finite()) {
        return Err(Error::domain("gauss_2f1", "non-finite argument"));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::domain("gauss_2f1", format!("pole: c = {c} is a nonpositive integer")));
    }
    if z > 1.0 {
        return Err(Error::domain("gauss_2f1", format!("z = {z} lies beyond the branch point")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return series(a, b, c, z);
    }
    if z == 1.0 {
        if c - a - b > 0.0 {
            return gauss_sum(a, b, c);
        }
        return Err(Error::domain(
            "gauss_2f1",
            format!("diverges at z = 1 with c - a - b = {}", c - a - b),
        ));
    }
    if z < -0.5 {
        // Pfaff: (1-z)^{-a} 2F1(a, c-b; c; z/(z-1)), argument in (1/3, 1).
        let w = z / (z - 1.0);
        return Ok((1.0 - z).powf(-a) * gauss_2f1(a, c - b, c, w)?);
    }
    if z <= 0.75 {
        return series(a, b, c, z);
    }
    near_one(a, b, c, z)
}
