//! Sites on `S^{d1} x S^{d2} x R^d` and their pairwise invariants.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

/// Dimensions `(d1, d2, d)` of the product space `S^{d1} x S^{d2} x R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub d1: u32,
    pub d2: u32,
    pub d: u32,
}

impl Dims {
    pub fn new(d1: u32, d2: u32, d: u32) -> Result<Self> {
        if d1 == 0 || d2 == 0 || d == 0 {
            return Err(Error::invalid(format!("dimensions must be >= 1, got ({d1}, {d2}, {d})")));
        }
        Ok(Dims { d1, d2, d })
    }
}

/// A point of `S^n`, stored as `n + 1` coordinates of unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Normalizes `coords`; fails on (near-)zero or non-finite input.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if coords.len() < 2 || !(norm > 1e-12) || !norm.is_finite() {
            return Err(Error::invalid(format!(
                "cannot normalize {coords:?} to a point of a sphere"
            )));
        }
        Ok(UnitVector(coords.into_iter().map(|c| c / norm).collect()))
    }

    /// Point on the circle at angle `theta`.
    pub fn from_angle(theta: f64) -> Self {
        UnitVector(vec![theta.cos(), theta.sin()])
    }

    /// Dimension `n` of the sphere `S^n`.
    pub fn sphere_dim(&self) -> u32 {
        (self.0.len() - 1) as u32
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Inner product clamped to `[-1, 1]`.
    pub fn dot(&self, other: &UnitVector) -> f64 {
        let v: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        v.clamp(-1.0, 1.0)
    }

    /// Polar angle `atan2(y, x)` of a circle point.
    pub fn angle(&self) -> f64 {
        self.0[1].atan2(self.0[0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub x1: UnitVector,
    pub x2: UnitVector,
    pub u: Vec<f64>,
}

impl Site {
    pub fn new(x1: UnitVector, x2: UnitVector, u: Vec<f64>) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::invalid("Euclidean component must have at least one coordinate"));
        }
        Ok(Site { x1, x2, u })
    }

    pub fn dims(&self) -> Dims {
        Dims {
            d1: self.x1.sphere_dim(),
            d2: self.x2.sphere_dim(),
            d: self.u.len() as u32,
        }
    }
}

/// The invariants `(s, r, h)` of a site pair: two sphere inner products and a Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Invariants3 {
    pub s: f64,
    pub r: f64,
    pub h: f64,
}

impl Invariants3 {
    /// Clamps `s`, `r` into `[-1, 1]` and takes `|h|`.
    pub fn new(s: f64, r: f64, h: f64) -> Self {
        Invariants3 {
            s: s.clamp(-1.0, 1.0),
            r: r.clamp(-1.0, 1.0),
            h: h.abs(),
        }
    }

    /// `(1, 1, 0)`: a site paired with itself.
    pub const ORIGIN: Invariants3 = Invariants3 { s: 1.0, r: 1.0, h: 0.0 };
}

pub fn reduce(a: &Site, b: &Site) -> Result<Invariants3> {
    let (da, db) = (a.dims(), b.dims());
    if da != db {
        return Err(Error::dims(format!("sites live in {da:?} and {db:?}")));
    }
    let h = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    Ok(Invariants3 {
        s: a.x1.dot(&b.x1),
        r: a.x2.dot(&b.x2),
        h,
    })
}

/// Uniform point of `S^n` from a normalized standard Gaussian vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: u32) -> UnitVector {
    loop {
        let v: Vec<f64> = (0..=n).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = UnitVector::new(v) {
            return u;
        }
    }
}

/// `count` sites with uniform sphere components and Euclidean components uniform in
/// `[-box_halfwidth, box_halfwidth]^d`; deterministic in `seed`.
pub fn random_sites(seed: u64, count: usize, dims: Dims, box_halfwidth: f64) -> Vec<Site> {
    let mut rng = rng_from_seed(seed);
    let w = box_halfwidth.abs();
    (0..count)
        .map(|_| {
            let x1 = random_unit_vector(&mut rng, dims.d1);
            let x2 = random_unit_vector(&mut rng, dims.d2);
            let u = (0..dims.d).map(|_| rng.random_range(-w..=w)).collect();
            Site { x1, x2, u }
        })
        .collect()
}
