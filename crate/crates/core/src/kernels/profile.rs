use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::matern;

/// Radial correlation profiles, each positive definite on every `R^d` and equal to 1 at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialProfile {
    Matern { alpha: f64, nu: f64 },
    /// `exp(-(alpha h)^2)`
    Gaussian { alpha: f64 },
    /// `exp(-alpha h)`
    Exponential { alpha: f64 },
}

impl RadialProfile {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            RadialProfile::Matern { alpha, nu } => alpha > 0.0 && nu > 0.0 && alpha.is_finite() && nu.is_finite(),
            RadialProfile::Gaussian { alpha } | RadialProfile::Exponential { alpha } => {
                alpha > 0.0 && alpha.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("profile parameters must be positive: {self:?}")))
        }
    }

    pub fn eval(&self, h: f64) -> f64 {
        match *self {
            RadialProfile::Matern { alpha, nu } => matern(h, alpha, nu),
            RadialProfile::Gaussian { alpha } => (-(alpha * h).powi(2)).exp(),
            RadialProfile::Exponential { alpha } => (-alpha * h.abs()).exp(),
        }
    }
}
