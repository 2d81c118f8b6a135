//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest absolute asymmetry `|m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenvalues of a symmetric matrix, sorted ascending.
///
/// Fails when the input is not square or is visibly non-symmetric (relative
/// asymmetry above `1e-10`), which for a Gram matrix means a kernel bug.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(format!(
            "eigenvalues of a non-square {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Ok(DVector::zeros(0));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let asym = asymmetry(m);
    if !(asym <= 1e-10 * scale) {
        return Err(Error::Linalg(format!(
            "matrix is not symmetric (asymmetry {asym:e}, scale {scale:e})"
        )));
    }
    let mut eig = m.clone().symmetric_eigenvalues();
    let mut v: Vec<f64> = eig.iter().copied().collect();
    v.sort_by(|a, b| a.total_cmp(b));
    for (dst, src) in eig.iter_mut().zip(v) {
        *dst = src;
    }
    Ok(eig)
}

/// `lambda_min / max |lambda|`; matrices whose spectral radius is at most `floor` count as
/// numerically zero and get ratio 0.
pub fn eig_ratio(eigs: &DVector<f64>, floor: f64) -> f64 {
    if eigs.is_empty() {
        return 0.0;
    }
    let spread = eigs.amax();
    if spread <= floor {
        0.0
    } else {
        eigs.min() / spread
    }
}

/// Whether a symmetric matrix is positive semidefinite up to `-tol * max|lambda|`.
pub fn is_psd(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    let eigs = symmetric_eigenvalues(m)?;
    Ok(eig_ratio(&eigs, 0.0) >= -tol)
}

/// Orthonormal basis (as columns, `n x (n-1)`) of the vectors in `R^n` summing to zero.
///
/// Helmert contrasts: column `k` is proportional to `(1, ..., 1, -k, 0, ..., 0)`.
pub fn helmert_contrasts(n: usize) -> DMatrix<f64> {
    let cols = n.saturating_sub(1);
    let mut h = DMatrix::zeros(n, cols);
    for k in 1..n {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for i in 0..k {
            h[(i, k - 1)] = 1.0 / norm;
        }
        h[(k, k - 1)] = -(k as f64) / norm;
    }
    h
}

/// Orthonormal basis of the block contrasts in `R^{n p}` (index `site * p + component`):
/// vectors whose `n` blocks of length `p` sum to the zero vector.
pub fn block_contrasts(n: usize, p: usize) -> DMatrix<f64> {
    helmert_contrasts(n).kronecker(&DMatrix::identity(p, p))
}

/// Largest eigenvalue of `m` restricted to the contrasts of `R^n` (sums to zero),
/// relative to the spectral radius of `m`; conditionally negative definite means `<= 0`.
pub fn contrast_max_ratio(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n < 2 {
        return Ok(0.0);
    }
    let h = helmert_contrasts(n);
    let proj = h.transpose() * m * &h;
    let mut proj_sym = proj.clone();
    symmetrize(&mut proj_sym);
    let eigs = symmetric_eigenvalues(&proj_sym)?;
    let scale = symmetric_eigenvalues(m)?.amax();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(eigs.max() / scale)
}

/// Upper triangle (row-major, `i <= j`) of a square matrix.
pub fn upper_triangle(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub fn from_upper_triangle(p: usize, values: &[f64]) -> Result<DMatrix<f64>> {
    if values.len() != p * (p + 1) / 2 {
        return Err(Error::dims(format!(
            "expected {} upper-triangle entries for p = {p}, got {}",
            p * (p + 1) / 2,
            values.len()
        )));
    }
    let mut m = DMatrix::zeros(p, p);
    let mut it = values.iter();
    for i in 0..p {
        for j in i..p {
            let v = *it.next().unwrap();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// Parse a row-major nested list into a matrix, checking it is rectangular.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::dims("ragged matrix rows"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
