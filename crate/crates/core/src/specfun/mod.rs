//! Scalar special functions and quadrature rules.
//!
//! Every function here is pure; Gamma-function ratios are formed in log space.

mod bessel;
mod gamma;
mod gegenbauer;
mod harmonics;
mod hypergeometric;
mod quadrature;

pub use bessel::{bessel_k, bessel_k_scaled, ln_bessel_k, matern};
pub use gamma::{beta_fn, gamma, ln_beta, log_gamma, rgamma};
pub use gegenbauer::{gegenbauer_normalized, gegenbauer_raw, GegenbauerTable};
pub use harmonics::{harmonic_dim, ln_harmonic_dim, sphere_area};
pub use hypergeometric::gauss_2f1;
pub use quadrature::{gauss_jacobi_rule, gauss_jacobi_rule_general, QuadratureRule};

/// Default number of quadrature nodes per axis.
pub const DEFAULT_QUAD_ORDER: usize = 64;
