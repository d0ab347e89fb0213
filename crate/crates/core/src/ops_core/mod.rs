//! Grids, the κ/ν transform, operator expressions and antilinear polar decomposition.

mod expr;
mod grid;
mod polar;

pub use expr::{DenseOp, OperatorExpr, Symbol, DEFAULT_DENSE_CAP};
pub use grid::{centered_dft, GridSpec, Rep, StateVector};
pub use polar::{
    antilinear_square, antilinear_times_linear, complexify_antilinear, complexify_linear, op_norm,
    polar_decompose_antilinear, realify_antilinear, realify_linear, AntilinearPolar,
};

/// Default identity/unitarity tolerance `1e-10·sqrt(n)`.
pub fn default_tol(n_points: usize) -> f64 {
    1e-10 * (n_points as f64).sqrt()
}

/// Minimum value of a unimodal `f` on `[a, b]`.
pub fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    for _ in 0..100 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    f(0.5 * (a + b))
}
