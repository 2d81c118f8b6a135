use std::f64::consts::PI;

use super::gamma::log_gamma;
use crate::error::{Error, Result};

/// Dimension of the space of degree-`k` spherical harmonics on `S^n`:
/// `(2k + n - 1) (k + n - 2)! / (k! (n - 1)!)`, with the value 1 at `(n, k) = (1, 0)`.
///
/// Exact integer arithmetic; overflow of `u64` is an error.
pub fn harmonic_dim(n: u32, k: u32) -> Result<u64> {
    if n == 0 {
        return Err(Error::domain("harmonic_dim", "sphere dimension n must be >= 1"));
    }
    if k == 0 {
        return Ok(1);
    }
    if n == 1 {
        return Ok(2);
    }
    let overflow = || Error::Overflow(format!("harmonic_dim(n = {n}, k = {k})"));
    // binom(k + n - 2, k) built incrementally; every partial product is an exact binomial.
    let (n, k) = (n as u128, k as u128);
    let top = n - 2;
    let mut binom: u128 = 1;
    for i in 1..=top {
        binom = binom.checked_mul(k + i).ok_or_else(overflow)? / i;
    }
    let num = binom.checked_mul(2 * k + n - 1).ok_or_else(overflow)?;
    debug_assert_eq!(num % (n - 1), 0);
    u64::try_from(num / (n - 1)).map_err(|_| overflow())
}

/// `ln` of [`harmonic_dim`], valid for arguments where the integer overflows.
pub fn ln_harmonic_dim(n: u32, k: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("harmonic_dim", "sphere dimension n must be >= 1"));
    }
    if k == 0 {
        return Ok(0.0);
    }
    if n == 1 {
        return Ok(2f64.ln());
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok((2.0 * kf + nf - 1.0).ln() + log_gamma(kf + nf - 1.0)?
        - log_gamma(kf + 1.0)?
        - log_gamma(nf)?)
}

/// Surface area of `S^n`: `2 pi^{(n+1)/2} / Gamma((n+1)/2)`.
pub fn sphere_area(n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("sphere_area", "n must be >= 1"));
    }
    let half = (n as f64 + 1.0) / 2.0;
    Ok(2.0 * (half * PI.ln() - log_gamma(half)?).exp())
}
