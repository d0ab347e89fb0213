use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::grid::{GridSpec, Rep, StateVector};
use crate::error::{Error, Result};

pub const DEFAULT_DENSE_CAP: usize = 4096;

type SymbolFn = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Scalar function used by the multiplication nodes.
#[derive(Clone)]
pub enum Symbol {
    /// `e^{coeff·x}`.
    Exp { coeff: Complex64 },
    /// `e^{i·a·(lambda·e^x + rho·e^{-x})}`. Complex `a` with `Im a ≥ 0` and a
    /// non-negative generator gives a contraction.
    LrPhase { a: Complex64, lambda: f64, rho: f64 },
    Custom { label: String, f: SymbolFn },
}

impl Symbol {
    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Symbol::Custom { label: label.into(), f: Arc::new(f) }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Symbol::Exp { coeff } => (coeff * x).exp(),
            Symbol::LrPhase { a, lambda, rho } => {
                let mut h = 0.0;
                if *lambda != 0.0 {
                    h += lambda * x.exp();
                }
                if *rho != 0.0 {
                    h += rho * (-x).exp();
                }
                if h == 0.0 {
                    return Complex64::new(1.0, 0.0);
                }
                (Complex64::i() * a * h).exp()
            }
            Symbol::Custom { f, .. } => f(x),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Symbol::Exp { coeff } => format!("exp({coeff}*x)"),
            Symbol::LrPhase { a, lambda, rho } => format!("exp(i*{a}*({lambda}e^x+{rho}e^-x))"),
            Symbol::Custom { label, .. } => label.clone(),
        }
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Symbol::Exp { coeff: a }, Symbol::Exp { coeff: b }) => a == b,
            (
                Symbol::LrPhase { a, lambda, rho },
                Symbol::LrPhase { a: a2, lambda: l2, rho: r2 },
            ) => a == a2 && lambda == l2 && rho == r2,
            (Symbol::Custom { label: a, f: fa }, Symbol::Custom { label: b, f: fb }) => {
                a == b && Arc::ptr_eq(fa, fb)
            }
            _ => false,
        }
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Dense matrix acting on κ samples. When `antilinear`, the action is `v ↦ M·conj(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOp {
    pub matrix: DMatrix<Complex64>,
    pub antilinear: bool,
}

impl DenseOp {
    pub fn apply_samples(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let n = samples.len();
        let v = if self.antilinear {
            DMatrix::from_iterator(n, 1, samples.iter().map(|z| z.conj()))
        } else {
            DMatrix::from_column_slice(n, 1, samples)
        };
        (&self.matrix * v).as_slice().to_vec()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorExpr {
    Identity,
    KappaMult(Symbol),
    NuMult(Symbol),
    /// `f(κ) ↦ conj f(-κ)`; plain conjugation in ν.
    ConjFlip,
    /// `f(κ) ↦ conj f(κ)`, no flip.
    Conj,
    Dense(Arc<DenseOp>),
    /// Applied right to left: `Compose([A, B])·v = A(B(v))`.
    Compose(Vec<OperatorExpr>),
    Scale(Complex64),
}

impl OperatorExpr {
    pub fn dense(matrix: DMatrix<Complex64>, antilinear: bool) -> Self {
        OperatorExpr::Dense(Arc::new(DenseOp { matrix, antilinear }))
    }

    /// Complex conjugation of κ samples with no flip.
    pub fn plain_conjugation() -> Self {
        OperatorExpr::Conj
    }

    pub fn compose(ops: impl IntoIterator<Item = OperatorExpr>) -> Self {
        OperatorExpr::Compose(ops.into_iter().collect())
    }

    pub fn is_antilinear(&self) -> bool {
        match self {
            OperatorExpr::ConjFlip | OperatorExpr::Conj => true,
            OperatorExpr::Dense(d) => d.antilinear,
            OperatorExpr::Compose(ops) => ops.iter().fold(false, |p, o| p ^ o.is_antilinear()),
            _ => false,
        }
    }

    /// Output is returned in the representation of the input.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        let out = self.apply_any(v.clone())?;
        out.to_rep(v.rep)
    }

    fn apply_any(&self, v: StateVector) -> Result<StateVector> {
        match self {
            OperatorExpr::Identity => Ok(v),
            OperatorExpr::Scale(c) => Ok(v.scale(*c)),
            OperatorExpr::KappaMult(s) => multiply(v.to_rep(Rep::Kappa)?, s),
            OperatorExpr::NuMult(s) => multiply(v.to_rep(Rep::Nu)?, s),
            OperatorExpr::Conj => Ok(v.to_rep(Rep::Kappa)?.map(|z| z.conj())),
            OperatorExpr::ConjFlip => Ok(match v.rep {
                Rep::Nu => v.map(|z| z.conj()),
                Rep::Kappa => {
                    let g = v.grid;
                    let samples = (0..g.n_points).map(|j| v.samples[g.flip_index(j)].conj()).collect();
                    StateVector { grid: g, samples, rep: Rep::Kappa }
                }
            }),
            OperatorExpr::Dense(d) => {
                if d.matrix.nrows() != v.grid.n_points || d.matrix.ncols() != v.grid.n_points {
                    return Err(Error::GridMismatch(format!(
                        "dense {}x{} on grid of {} points",
                        d.matrix.nrows(),
                        d.matrix.ncols(),
                        v.grid.n_points
                    )));
                }
                let k = v.to_rep(Rep::Kappa)?;
                let samples = d.apply_samples(&k.samples);
                let out = StateVector { grid: v.grid, samples, rep: Rep::Kappa };
                if !out.is_finite() {
                    return Err(Error::NonFinite("dense node".into()));
                }
                Ok(out)
            }
            OperatorExpr::Compose(ops) => ops.iter().rev().try_fold(v, |acc, op| op.apply_any(acc)),
        }
    }

    /// Matrix on κ samples. For odd parity the matrix `M` satisfies `op(v) = M·conj(v)`.
    pub fn materialize(&self, grid: GridSpec, cap: usize) -> Result<DenseOp> {
        let n = grid.n_points;
        if n > cap {
            return Err(Error::DenseCap { n, cap });
        }
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.apply(&StateVector::delta(grid, j))?;
            m.column_mut(j).copy_from_slice(&col.samples);
        }
        Ok(DenseOp { matrix: m, antilinear: self.is_antilinear() })
    }
}

fn multiply(mut v: StateVector, s: &Symbol) -> Result<StateVector> {
    let g = v.grid;
    for (i, z) in v.samples.iter_mut().enumerate() {
        let x = match v.rep {
            Rep::Kappa => g.kappa(i),
            Rep::Nu => g.nu(i),
        };
        if *z != Complex64::new(0.0, 0.0) {
            *z *= s.eval(x);
        }
    }
    if !v.is_finite() {
        return Err(Error::NonFinite(s.label()));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(g: GridSpec, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = (0..g.n_points).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        StateVector::new(g, s, Rep::Kappa).unwrap()
    }

    fn random_matrix(n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn conj_flip_is_involution() {
        let g = GridSpec::new(64, 3.0).unwrap();
        let op = OperatorExpr::compose([OperatorExpr::ConjFlip, OperatorExpr::ConjFlip]);
        assert!(!op.is_antilinear());
        for seed in 0..10 {
            let v = random_state(g, seed);
            assert_eq!(op.apply(&v).unwrap(), v);
            let vn = v.to_nu().unwrap();
            assert!(op.apply(&vn).unwrap().sub(&vn).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn conj_flip_agrees_across_reps() {
        let g = GridSpec::new(64, 3.0).unwrap();
        let v = random_state(g, 3);
        let via_kappa = OperatorExpr::ConjFlip.apply(&v).unwrap();
        let via_nu = OperatorExpr::ConjFlip.apply(&v.to_nu().unwrap()).unwrap().to_kappa().unwrap();
        assert!(via_kappa.sub(&via_nu).unwrap().norm() < 1e-13);
    }

    #[test]
    fn unimodular_kappa_mult_preserves_norm() {
        let g = GridSpec::new(256, 8.0).unwrap();
        let op = OperatorExpr::KappaMult(Symbol::Exp { coeff: c(0.0, 2.0 * PI) });
        let v = random_state(g, 1);
        assert!((op.apply(&v).unwrap().norm() - v.norm()).abs() < 1e-12);
    }

    #[test]
    fn tomita_expression_fixes_wedge_vectors() {
        // (S f)(κ) = e^{-πκ}·conj f(-κ) written as ConjFlip after KappaMult(e^{πκ}).
        let g = GridSpec::new(512, 8.0).unwrap();
        let gauss = |k: f64| c((-(k - 1.0) * (k - 1.0)).exp(), 0.3 * (-(k - 1.0) * (k - 1.0)).exp());
        let f = StateVector::from_kappa_fn(g, |k| gauss(k) + (-PI * k).exp() * gauss(-k).conj());
        let s = OperatorExpr::compose([OperatorExpr::ConjFlip, OperatorExpr::KappaMult(Symbol::Exp { coeff: c(PI, 0.0) })]);
        assert!(s.is_antilinear());
        let sf = s.apply(&f).unwrap();
        assert!(sf.rel_diff(&f).unwrap() < 1e-12);
    }

    #[test]
    fn unbounded_symbol_overflow_is_reported() {
        let g = GridSpec::new(64, 400.0).unwrap();
        let op = OperatorExpr::KappaMult(Symbol::Exp { coeff: c(PI, 0.0) });
        let v = random_state(g, 0);
        assert!(matches!(op.apply(&v), Err(Error::NonFinite(_))));
    }

    #[test]
    fn dense_grid_mismatch() {
        let g = GridSpec::new(16, 1.0).unwrap();
        let op = OperatorExpr::dense(DMatrix::identity(8, 8), false);
        assert!(matches!(op.apply(&random_state(g, 0)), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn materialize_identity() {
        let g = GridSpec::new(32, 2.0).unwrap();
        let m = OperatorExpr::Identity.materialize(g, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(m.matrix, DMatrix::identity(32, 32));
        assert!(!m.antilinear);
    }

    #[test]
    fn materialize_respects_cap() {
        let g = GridSpec::new(64, 2.0).unwrap();
        assert_eq!(OperatorExpr::Identity.materialize(g, 32).unwrap_err(), Error::DenseCap { n: 64, cap: 32 });
    }

    #[test]
    fn materialized_lightlike_symbol_is_unitary() {
        let g = GridSpec::new(128, 16.0).unwrap();
        let op = OperatorExpr::NuMult(Symbol::LrPhase { a: c(0.7, 0.0), lambda: 1.0, rho: 0.0 });
        let m = op.materialize(g, DEFAULT_DENSE_CAP).unwrap().matrix;
        let err = (m.adjoint() * &m - DMatrix::<Complex64>::identity(128, 128)).norm();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn materialize_agrees_with_apply() {
        let g = GridSpec::new(64, 4.0).unwrap();
        let ops = [
            OperatorExpr::compose([
                OperatorExpr::NuMult(Symbol::LrPhase { a: c(0.3, 0.0), lambda: 1.0, rho: 0.5 }),
                OperatorExpr::KappaMult(Symbol::Exp { coeff: c(0.0, 1.1) }),
            ]),
            OperatorExpr::compose([
                OperatorExpr::ConjFlip,
                OperatorExpr::Scale(c(0.2, -1.0)),
                OperatorExpr::NuMult(Symbol::Exp { coeff: c(0.0, 0.4) }),
            ]),
        ];
        for op in &ops {
            let m = op.materialize(g, DEFAULT_DENSE_CAP).unwrap();
            for seed in 0..20 {
                let v = random_state(g, seed);
                let direct = op.apply(&v).unwrap();
                let via = StateVector::new(g, m.apply_samples(&v.samples), Rep::Kappa).unwrap();
                assert!(direct.sub(&via).unwrap().norm() < 1e-10);
            }
        }
    }

    #[test]
    fn materialize_of_compose_is_matrix_product() {
        let g = GridSpec::new(24, 2.0).unwrap();
        let a = random_matrix(24, 1);
        let b = random_matrix(24, 2);
        let op = OperatorExpr::compose([OperatorExpr::dense(a.clone(), false), OperatorExpr::dense(b.clone(), false)]);
        let m = op.materialize(g, DEFAULT_DENSE_CAP).unwrap().matrix;
        assert!((m - &a * &b).norm() < 1e-10);
    }

    fn arb_factor() -> impl Strategy<Value = OperatorExpr> {
        prop_oneof![
            Just(OperatorExpr::ConjFlip),
            (-1.0f64..1.0).prop_map(|t| OperatorExpr::KappaMult(Symbol::Exp { coeff: c(0.0, t) })),
            (0.0f64..0.5).prop_map(|a| OperatorExpr::NuMult(Symbol::LrPhase { a: c(a, 0.0), lambda: 1.0, rho: 0.0 })),
            (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y)| OperatorExpr::Scale(c(x, y))),
            Just(OperatorExpr::plain_conjugation()),
        ]
    }

    proptest! {
        #[test]
        fn parity_law(factors in prop::collection::vec(arb_factor(), 1..6), re in -2.0f64..2.0, im in -2.0f64..2.0, seed in 0u64..100) {
            let g = GridSpec::new(32, 4.0).unwrap();
            let op = OperatorExpr::Compose(factors);
            let v = random_state(g, seed);
            let z = c(re, im);
            let lhs = op.apply(&v.scale(z)).unwrap();
            let base = op.apply(&v).unwrap();
            let rhs = if op.is_antilinear() { base.scale(z.conj()) } else { base.scale(z) };
            prop_assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-11 * (1.0 + rhs.norm()));
        }
    }
}
