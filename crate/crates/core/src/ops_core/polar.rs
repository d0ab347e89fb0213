use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real 2n×2n form of a complex-linear map on `x + iy`.
pub fn realify_linear(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut r = DMatrix::zeros(2 * n, 2 * m.ncols());
    for i in 0..n {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            r[(i, j)] = z.re;
            r[(i, j + m.ncols())] = -z.im;
            r[(i + n, j)] = z.im;
            r[(i + n, j + m.ncols())] = z.re;
        }
    }
    r
}

/// Real form of `v ↦ M·conj(v)`.
pub fn realify_antilinear(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = m.nrows();
    let k = m.ncols();
    let mut r = DMatrix::zeros(2 * n, 2 * k);
    for i in 0..n {
        for j in 0..k {
            let z = m[(i, j)];
            r[(i, j)] = z.re;
            r[(i, j + k)] = z.im;
            r[(i + n, j)] = z.im;
            r[(i + n, j + k)] = -z.re;
        }
    }
    r
}

/// Complex-linear part of a real 2n×2n matrix.
pub fn complexify_linear(r: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = r.nrows() / 2;
    let k = r.ncols() / 2;
    DMatrix::from_fn(n, k, |i, j| {
        Complex64::new(
            0.5 * (r[(i, j)] + r[(i + n, j + k)]),
            0.5 * (r[(i + n, j)] - r[(i, j + k)]),
        )
    })
}

/// Complex-antilinear part of a real 2n×2n matrix, as `M` with action `M·conj(v)`.
pub fn complexify_antilinear(r: &DMatrix<f64>) -> DMatrix<Complex64> {
    let n = r.nrows() / 2;
    let k = r.ncols() / 2;
    DMatrix::from_fn(n, k, |i, j| {
        Complex64::new(
            0.5 * (r[(i, j)] - r[(i + n, j + k)]),
            0.5 * (r[(i, j + k)] + r[(i + n, j)]),
        )
    })
}

#[derive(Debug, Clone)]
pub struct AntilinearPolar {
    /// Antiunitary factor, acting as `v ↦ j·conj(v)`.
    pub j: DMatrix<Complex64>,
    pub delta: DMatrix<Complex64>,
    pub delta_sqrt: DMatrix<Complex64>,
    /// `ln Δ`, formed from the singular values so that it stays accurate when `Δ` spans many
    /// orders of magnitude.
    pub log_delta: DMatrix<Complex64>,
    pub singular_values: Vec<f64>,
}

/// `S = J·Δ^{1/2}` for `S v = s·conj(v)`, through the real SVD of the realified map.
///
/// `rel_tol` bounds the smallest singular value relative to the largest.
pub fn polar_decompose_antilinear(s: &DMatrix<Complex64>, rel_tol: f64) -> Result<AntilinearPolar> {
    if s.nrows() != s.ncols() {
        return Err(Error::Singular(format!("non-square {}x{}", s.nrows(), s.ncols())));
    }
    let r = realify_antilinear(s);
    let svd = r.svd(true, true);
    let (Some(p), Some(qt)) = (svd.u, svd.v_t) else {
        return Err(Error::Singular("svd failed".into()));
    };
    let sig = svd.singular_values;
    let smax = sig.max();
    let smin = sig.min();
    if !(smin > rel_tol * smax) {
        return Err(Error::Singular(format!("sigma_min/sigma_max = {:.3e}", smin / smax)));
    }
    let q = qt.transpose();
    let a = &q * DMatrix::from_diagonal(&sig) * &qt;
    let a2 = &q * DMatrix::from_diagonal(&sig.map(|x| x * x)) * &qt;
    let log = &q * DMatrix::from_diagonal(&sig.map(|x| 2.0 * x.ln())) * &qt;
    let jr = &p * &qt;
    let mut singular_values: Vec<f64> = sig.iter().copied().collect();
    singular_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Each complex singular value shows up twice in the realification.
    let singular_values = singular_values.into_iter().step_by(2).collect();
    Ok(AntilinearPolar {
        j: complexify_antilinear(&jr),
        delta: complexify_linear(&a2),
        delta_sqrt: complexify_linear(&a),
        log_delta: complexify_linear(&log),
        singular_values,
    })
}

/// Composition of an antilinear `J` (as `v ↦ j·conj v`) with a linear `A`: `J·A` has matrix `j·conj(A)`.
pub fn antilinear_times_linear(j: &DMatrix<Complex64>, a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    j * a.map(|z| z.conj())
}

/// Square of an antilinear map: `J(J v) = j·conj(j)·v`.
pub fn antilinear_square(j: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    j * j.map(|z| z.conj())
}

/// Spectral norm via singular values.
pub fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().singular_values().max()
}
