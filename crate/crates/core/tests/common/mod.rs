//! Random valid parameter draws and the planted-violation catalogue shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use hypertorus::kernels::{
    CrossVariogramSpec, ExpansionKernel, ExpansionTerm, FClassKernel, FnKernel, MatrixKernel,
    MaternSpectralKernel, RadialProfile, SinhSeriesKernel, VarianceScaling,
};
use hypertorus::nonstat::{kappa, GFunction, UpsilonForm, XiKernel, XiTerm};
use hypertorus::seeding::rng_from_seed;
use hypertorus::{Dims, Invariants3};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rng_from_seed(seed)
}

/// `A A^T / p + eps I` with standard normal `A`, scaled by `scale`.
pub fn random_psd(rng: &mut impl Rng, p: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
    let m = &a * a.transpose() / p as f64 + DMatrix::identity(p, p) * 0.05;
    m * scale
}

/// Correlation matrix with entries in `(0, 1)`: `(1 - rho) I + rho J` after a random positive rescaling.
pub fn random_positive_correlation(rng: &mut impl Rng, p: usize) -> DMatrix<f64> {
    let rho = rng.random_range(0.05..0.9);
    DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho })
}

pub fn random_correlation(rng: &mut impl Rng, p: usize) -> DMatrix<f64> {
    let m = random_psd(rng, p, 1.0);
    DMatrix::from_fn(p, p, |i, j| m[(i, j)] / (m[(i, i)] * m[(j, j)]).sqrt())
}

pub fn random_profile(rng: &mut impl Rng) -> RadialProfile {
    let alpha = rng.random_range(0.3..2.0);
    match rng.random_range(0..3) {
        0 => RadialProfile::Matern {
            alpha,
            nu: rng.random_range(0.3..2.5),
        },
        1 => RadialProfile::Gaussian { alpha },
        _ => RadialProfile::Exponential { alpha },
    }
}

pub fn profiles() -> [RadialProfile; 3] {
    [
        RadialProfile::Matern { alpha: 1.2, nu: 1.5 },
        RadialProfile::Gaussian { alpha: 0.8 },
        RadialProfile::Exponential { alpha: 0.6 },
    ]
}

/// Random PSD coefficients at every degree `k <= k_max`, cycling through the profile palette.
pub fn draw_expansion(rng: &mut impl Rng, dims: Dims, p: usize, k_max: (usize, usize)) -> ExpansionKernel {
    let mut terms = Vec::new();
    for k1 in 0..=k_max.0 {
        for k2 in 0..=k_max.1 {
            let decay = 1.0 / (1.0 + (k1 + k2) as f64).powi(2);
            terms.push(ExpansionTerm {
                k1,
                k2,
                matrix: random_psd(rng, p, decay),
                profile: random_profile(rng),
            });
        }
    }
    ExpansionKernel::new(dims, terms, false).unwrap()
}

pub fn draw_variogram(rng: &mut impl Rng, p: usize) -> CrossVariogramSpec {
    let b: Vec<f64> = (0..p).map(|_| rng.random_range(0.3..1.0)).collect();
    let r = random_positive_correlation(rng, p);
    CrossVariogramSpec {
        v: (0..p).map(|_| rng.random_range(0.6..1.5)).collect(),
        beta: DMatrix::from_fn(p, p, |i, j| b[i] * b[j] * r[(i, j)]),
        a: rng.random_range(0.2..2.0),
        b: rng.random_range(0.0..2.0),
        kappa: rng.random_range(0.5..2.0),
    }
}

pub fn draw_sinh(rng: &mut impl Rng, p: usize, d2: u32, d: u32) -> SinhSeriesKernel {
    SinhSeriesKernel::new(Dims::new(1, d2, d).unwrap(), draw_variogram(rng, p), 2000).unwrap()
}

/// `m_ij = (c_i + c_j) / 2 + w |x_i - x_j|`: positive and conditionally negative definite.
pub fn random_cnd_positive(rng: &mut impl Rng, p: usize) -> DMatrix<f64> {
    let c: Vec<f64> = (0..p).map(|_| rng.random_range(0.4..2.5)).collect();
    let x: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = rng.random_range(0.0..0.5);
    DMatrix::from_fn(p, p, |i, j| 0.5 * (c[i] + c[j]) + w * (x[i] - x[j]).abs())
}

pub fn draw_fclass(rng: &mut impl Rng, p: usize, dims: Dims) -> FClassKernel {
    let mut terms = Vec::new();
    for k2 in 0..=2 {
        terms.push(ExpansionTerm {
            k1: 0,
            k2,
            matrix: random_psd(rng, p, 1.0 / (1.0 + k2 as f64)),
            profile: random_profile(rng),
        });
    }
    let inner = ExpansionKernel::new(dims, terms, false).unwrap();
    FClassKernel::new(
        dims,
        random_cnd_positive(rng, p),
        random_cnd_positive(rng, p),
        rng.random_range(0.3..3.0),
        inner,
    )
    .unwrap()
}

pub fn draw_matern(rng: &mut impl Rng, p: usize, dims: Dims) -> MaternSpectralKernel {
    MaternSpectralKernel::new(
        dims,
        VarianceScaling::new((0..p).map(|_| rng.random_range(0.5..2.0)).collect()).unwrap(),
        rng.random_range(0.3..2.0),
        random_correlation(rng, p),
        (0..p).map(|_| rng.random_range(0.3..2.5)).collect(),
        rng.random_range(0.0..0.3),
    )
    .unwrap()
}

pub fn random_dims(rng: &mut impl Rng) -> Dims {
    Dims::new(rng.random_range(1..4), rng.random_range(1..4), rng.random_range(1..4)).unwrap()
}

/// One kernel of each catalogue family, as trait objects.
pub fn catalogue(seed: u64, p: usize) -> Vec<(&'static str, Arc<dyn MatrixKernel>)> {
    let mut r = rng(seed);
    let dims = random_dims(&mut r);
    vec![
        ("expansion", Arc::new(draw_expansion(&mut r, dims, p, (2, 2))) as Arc<dyn MatrixKernel>),
        ("sinh_series", Arc::new(draw_sinh(&mut r, p, dims.d2, dims.d))),
        ("f_class", Arc::new(draw_fclass(&mut r, p, dims))),
        ("matern_spectral", Arc::new(draw_matern(&mut r, p, dims))),
    ]
}

/// `K_ij = 1 - 2 delta_ij`: its only coefficient (degree 0) is indefinite for `p = 2`.
pub fn planted_indefinite_constant(dims: Dims) -> FnKernel {
    FnKernel::new(2, dims, |_| Ok(DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0])))
}

/// The sinh series driven by `(v_i + v_j) + beta_ij exp(-a(1-r) - b h^kappa)` (plus sign).
pub fn planted_plus_sign_sinh(dims: Dims) -> FnKernel {
    let v = [0.05, 0.05];
    let beta = DMatrix::from_row_slice(2, 2, &[3.0, 2.9, 2.9, 3.0]);
    FnKernel::new(2, dims, move |inv: &Invariants3| {
        Ok(DMatrix::from_fn(2, 2, |i, j| {
            let g = v[i] + v[j] + beta[(i, j)] * (-(1.0 - inv.r) - inv.h).exp();
            hypertorus::kernels::sinh_series(inv.s, g, 400)
        }))
    })
}

/// Beta with an off-diagonal above one.
pub fn planted_matern(beta12: f64) -> MaternSpectralKernel {
    MaternSpectralKernel::new_unchecked(
        Dims::new(1, 1, 1).unwrap(),
        VarianceScaling::new(vec![1.0, 1.0]).unwrap(),
        1.0,
        DMatrix::from_row_slice(2, 2, &[1.0, beta12, beta12, 1.0]),
        vec![0.5, 1.5],
        0.0,
    )
    .unwrap()
}

/// A palette-built torus kernel up to degree `(n, n)` with decaying coefficients.
pub fn draw_xi(rng: &mut impl Rng, p: usize, d: u32, n: usize) -> XiKernel {
    let mut terms = Vec::new();
    for k1 in 0..=n {
        for k2 in 0..=n {
            let decay = 0.6f64.powi((k1 + k2) as i32);
            let form = if (k1 + k2) % 2 == 0 {
                UpsilonForm::Radial {
                    matrix: random_psd(rng, p, decay),
                    profile: random_profile(rng),
                }
            } else {
                let m = kappa(k1) * kappa(k2);
                UpsilonForm::Separable {
                    matrix: random_psd(rng, p, decay),
                    g: (0..m).map(|_| random_g(rng, d)).collect(),
                }
            };
            terms.push(XiTerm { k1, k2, form });
        }
    }
    XiKernel::new(d, terms).unwrap()
}

pub fn random_g(rng: &mut impl Rng, d: u32) -> GFunction {
    match rng.random_range(0..3) {
        0 => GFunction::GaussianBump {
            center: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
            width: rng.random_range(0.5..2.0),
            amplitude: rng.random_range(0.2..1.5),
        },
        1 => GFunction::Polynomial {
            axis: rng.random_range(0..d as usize),
            coeffs: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
        },
        _ => GFunction::Sinusoid {
            axis: rng.random_range(0..d as usize),
            frequency: rng.random_range(0.2..2.0),
            phase: rng.random_range(0.0..3.0),
            amplitude: rng.random_range(0.2..1.5),
        },
    }
}
