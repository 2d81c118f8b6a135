use hypertorus::specfun::{
    beta_fn, gauss_2f1, gauss_jacobi_rule, gauss_jacobi_rule_general, gegenbauer_normalized, harmonic_dim, matern,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn factorial(n: u32) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, i| acc * i)
}

/// `(2k + n - 1) (k + n - 2)! / (k! (n - 1)!)` in exact integers.
fn exact_dim(n: u32, k: u32) -> BigUint {
    if n == 1 {
        return BigUint::from(if k == 0 { 1u32 } else { 2 });
    }
    BigUint::from(2 * k + n - 1) * factorial(k + n - 2) / (factorial(k) * factorial(n - 1))
}

#[test]
fn harmonic_dim_exact_for_small_spheres() {
    for n in 1..=4 {
        for k in 0..=50 {
            assert_eq!(BigUint::from(harmonic_dim(n, k).unwrap()), exact_dim(n, k), "n={n} k={k}");
        }
    }
}

#[test]
fn harmonic_dim_growth_is_polynomial() {
    for n in 1..=3u32 {
        for k in 0..=200u32 {
            let ratio = harmonic_dim(n, k).unwrap() as f64 / ((k + 1) as f64).powi(n as i32 - 1);
            assert!((0.25..=4.0).contains(&ratio), "n={n} k={k} ratio={ratio}");
        }
    }
}

fn brute_2f1(a: f64, b: f64, c: f64, z: f64, terms: usize) -> f64 {
    let (mut term, mut sum) = (1.0, 1.0);
    for n in 0..terms {
        let n = n as f64;
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z;
        sum += term;
    }
    sum
}

#[test]
fn gegenbauer_orthogonality_on_larger_spheres() {
    for n in 2..=5u32 {
        let rule = gauss_jacobi_rule(64, n as f64 / 2.0 - 1.0).unwrap();
        for k in 0..=6 {
            for l in 0..=6 {
                if k != l {
                    let v = rule.integrate(|t| gegenbauer_normalized(n, k, t) * gegenbauer_normalized(n, l, t));
                    assert!(v.abs() < 1e-10, "n={n} k={k} l={l}: {v}");
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gegenbauer_bounded_and_unit_at_one(n in 1u32..8, k in 0usize..60, r in -1.0f64..=1.0) {
        prop_assert!(gegenbauer_normalized(n, k, r).abs() <= 1.0 + 1e-12);
        prop_assert!((gegenbauer_normalized(n, k, 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matern_nonincreasing(alpha in 0.1f64..5.0, nu in 0.1f64..6.0, h in 0.0f64..10.0, dh in 0.0f64..2.0) {
        let (a, b) = (matern(h, alpha, nu), matern(h + dh, alpha, nu));
        prop_assert!(b <= a + 1e-14, "M({h}) = {a} < M({}) = {b}", h + dh);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn matern_vanishes_at_infinity(alpha in 0.5f64..3.0, nu in 0.1f64..4.0) {
        prop_assert!(matern(400.0 / alpha, alpha, nu) < 1e-100);
    }

    #[test]
    fn hypergeometric_matches_series(a in 0.05f64..4.0, b in 0.05f64..4.0, c in 0.3f64..5.0, z in -0.5f64..0.5) {
        let want = brute_2f1(a, b, c, z, 200);
        let got = gauss_2f1(a, b, c, z).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn hypergeometric_matches_beta_mixture(t in -1.0f64..0.999, alpha in 0.3f64..3.0, tau in 0.2f64..3.0, nu in 0.3f64..3.0) {
        // Euler integral: B(alpha, nu + tau) 2F1 = int delta^{alpha-1} (1-delta)^{nu+tau-1} (1 - delta t)^{-tau}
        let rule = gauss_jacobi_rule_general(256, nu + tau - 1.0, alpha - 1.0).unwrap();
        let mix = rule.integrate(|x| (1.0 - 0.5 * (1.0 + x) * t).powf(-tau)) * 0.5f64.powf(alpha + nu + tau - 1.0);
        let want = mix / beta_fn(alpha, nu + tau).unwrap();
        let got = gauss_2f1(tau, alpha, alpha + nu + tau, t).unwrap();
        prop_assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
    }
}
