//! Matrix-valued positive definite covariance functions on the product space
//! `S^{d1} x S^{d2} x R^d` (a hypertorus times Euclidean space).
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: Gegenbauer polynomials, Bessel `K_nu`, the Matérn function,
//!   Gauss hypergeometric `2F1` and Gauss-Jacobi quadrature.
//! * [`geometry`]: unit vectors, sites and the reduction of a pair of sites to
//!   the invariants `(s, r, h)`.
//! * [`kernels`]: the catalogue of componentwise-isotropic matrix kernels.
//! * [`spectral`]: Gegenbauer coefficient extraction and reconstruction.
//! * [`validation`]: numerical positive / conditional negative definiteness audits.
//! * [`fields`]: Gaussian field simulation and simple kriging.
//! * [`nonstat`]: kernels that are not radially symmetric in `R^d`, on the torus `S^1 x S^1`.
//! * [`cli`]: the config-driven command line front end.

pub mod cli;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod nonstat;
pub mod seeding;
pub mod spectral;
pub mod specfun;
pub mod validation;

pub use error::{Error, Result};
pub use geometry::{Invariants3, Site, UnitVector};
pub use kernels::{Dims, MatrixKernel};
