//! One-particle wedge subspaces of the massive free field in 2+1 dimensions: Poincaré action
//! in momentum space, translation isotony and vertex invariance.
//!
//! Momenta are parametrized by `(ν, p₂)` with `p₀ = m⊥ cosh ν`, `p₁ = -m⊥ sinh ν`,
//! `m⊥ = √(m² + p₂²)`. Then `p₀⁻¹ dp₁ dp₂ = dν dp₂`, so the invariant measure becomes flat
//! and each `p₂` slice is a 1d rapidity vector whose conjugate variable is the W_R boost
//! generator `κ`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freefield1d::{wedge_vector, Side};
use crate::ops_core::{GridSpec, OperatorExpr, Rep, StateVector, Symbol};
use crate::subspace::{orthonormal_span, DEFAULT_RANK_TOL};
use crate::schrodinger::{unresolved_weight, AnalyticSum, AnalyticVector};

pub const DEFAULT_RESAMPLING_BOUND: f64 = 1e-2;

/// Rapidity grid times a symmetric `p₂` grid (cell centers, so `p₂ ↦ -p₂` is an index flip).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid2D {
    pub mass: f64,
    pub rapidity: GridSpec,
    pub n_p2: usize,
    pub p2_max: f64,
}

impl MomentumGrid2D {
    pub fn new(mass: f64, n_nu: usize, kappa_max: f64, n_p2: usize, p2_max: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidGrid(format!("mass must be positive, got {mass}")));
        }
        if n_p2 < 2 || !(p2_max > 0.0) {
            return Err(Error::InvalidGrid(format!("p2 grid needs n >= 2 and extent > 0, got {n_p2}, {p2_max}")));
        }
        Ok(Self { mass, rapidity: GridSpec::new(n_nu, kappa_max)?, n_p2, p2_max })
    }

    pub fn p2_step(&self) -> f64 {
        2.0 * self.p2_max / self.n_p2 as f64
    }

    pub fn p2(&self, j: usize) -> f64 {
        -self.p2_max + (j as f64 + 0.5) * self.p2_step()
    }

    pub fn m_perp(&self, j: usize) -> f64 {
        self.mass.hypot(self.p2(j))
    }

    /// `(p₀, p₁, p₂)` at rapidity index `k`, slice `j`.
    pub fn momentum(&self, k: usize, j: usize) -> [f64; 3] {
        let nu = self.rapidity.nu(k);
        let mp = self.m_perp(j);
        [mp * nu.cosh(), -mp * nu.sinh(), self.p2(j)]
    }

    pub fn same_as(&self, other: &MomentumGrid2D) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// One rapidity vector per `p₂` slice; samples carry the `√Δp₂` weight.
#[derive(Debug, Clone, PartialEq)]
pub struct State2D {
    pub grid: MomentumGrid2D,
    pub slices: Vec<StateVector>,
}

impl State2D {
    pub fn zeros(grid: MomentumGrid2D, rep: Rep) -> Self {
        Self { grid, slices: vec![StateVector::zeros(grid.rapidity, rep); grid.n_p2] }
    }

    /// Samples `f(p₀, p₁, p₂)` in the rapidity representation.
    pub fn from_momentum_fn(grid: MomentumGrid2D, f: impl Fn([f64; 3]) -> Complex64) -> Self {
        let w = grid.p2_step().sqrt();
        let slices = (0..grid.n_p2)
            .map(|j| {
                let samples = (0..grid.rapidity.n_points).map(|k| f(grid.momentum(k, j)) * w).collect();
                StateVector::new(grid.rapidity, samples, Rep::Nu).expect("slice length matches")
            })
            .collect();
        Self { grid, slices }
    }

    pub fn to_rep(&self, rep: Rep) -> Result<Self> {
        let slices = self.slices.iter().map(|s| s.to_rep(rep)).collect::<Result<_>>()?;
        Ok(Self { grid: self.grid, slices })
    }

    pub fn norm(&self) -> f64 {
        self.slices.iter().map(|s| s.norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &State2D) -> Result<Complex64> {
        self.grid.same_as(&other.grid)?;
        self.slices.iter().zip(&other.slices).map(|(a, b)| a.inner(&b.to_rep(a.rep)?)).sum()
    }

    pub fn sub(&self, other: &State2D) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        let slices = self.slices.iter().zip(&other.slices).map(|(a, b)| a.sub(&b.to_rep(a.rep)?)).collect::<Result<_>>()?;
        Ok(Self { grid: self.grid, slices })
    }

    pub fn rel_diff(&self, other: &State2D) -> Result<f64> {
        let d = self.sub(other)?.norm();
        let n = other.norm();
        Ok(if n == 0.0 { d } else { d / n })
    }

    fn map_slices(&self, f: impl Fn(usize, &StateVector) -> Result<StateVector>) -> Result<Self> {
        let slices = self.slices.iter().enumerate().map(|(j, s)| f(j, s)).collect::<Result<_>>()?;
        Ok(Self { grid: self.grid, slices })
    }

    fn nu_samples(&self) -> Result<Vec<Vec<Complex64>>> {
        self.slices.iter().map(|s| Ok(s.to_rep(Rep::Nu)?.samples)).collect()
    }

    fn from_nu_samples(grid: MomentumGrid2D, cols: Vec<Vec<Complex64>>) -> Result<Self> {
        let slices = cols.into_iter().map(|c| StateVector::new(grid.rapidity, c, Rep::Nu)).collect::<Result<_>>()?;
        Ok(Self { grid, slices })
    }
}

/// `|Im<f|g>| / (‖f‖‖g‖)`, worst over `against`.
pub fn bilinear_residual_2d(f: &State2D, against: &[State2D]) -> Result<f64> {
    let nf = f.norm();
    let mut worst: f64 = 0.0;
    for g in against {
        let ng = g.norm();
        if nf == 0.0 || ng == 0.0 {
            continue;
        }
        worst = worst.max(f.inner(g)?.im.abs() / (nf * ng));
    }
    Ok(worst)
}

fn real_columns(states: &[State2D]) -> Result<DMatrix<f64>> {
    let cols: Vec<DVector<f64>> = states
        .iter()
        .map(|f| {
            let k = f.to_rep(Rep::Kappa)?;
            Ok(DVector::from_iterator(
                2 * k.slices.len() * f.grid.rapidity.n_points,
                k.slices.iter().flat_map(|s| s.samples.iter().flat_map(|z| [z.re, z.im])),
            ))
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_columns(&cols))
}

/// Sine of the largest principal angle between the real spans of two finite families.
pub fn span_gap_2d(a: &[State2D], b: &[State2D]) -> Result<f64> {
    let qa = orthonormal_span(&real_columns(a)?, DEFAULT_RANK_TOL);
    let qb = orthonormal_span(&real_columns(b)?, DEFAULT_RANK_TOL);
    let one_way = |x: &DMatrix<f64>, y: &DMatrix<f64>| {
        let rest = x - y * (y.transpose() * x);
        rest.singular_values().iter().copied().fold(0.0, f64::max)
    };
    Ok(one_way(&qa, &qb).max(one_way(&qb, &qa)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boost {
    /// Spatial direction, 1 or 2.
    pub direction: usize,
    pub rapidity: f64,
}

/// `t(x)∘R(θ)∘B∘j`, applied right to left. `j` is the reflection
/// `(x₀, x₁, x₂) ↦ (-x₀, -x₁, x₂)`, realized antiunitarily.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct PoincareElement {
    pub boost: Option<Boost>,
    pub rotation: f64,
    pub translation: [f64; 3],
    pub tcp: bool,
}

type Mat3 = [[f64; 3]; 3];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_vec(a: &Mat3, x: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| (0..3).map(|k| a[i][k] * x[k]).sum())
}

const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl PoincareElement {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn translation(x: [f64; 3]) -> Self {
        Self { translation: x, ..Self::default() }
    }

    pub fn boost(direction: usize, rapidity: f64) -> Self {
        Self { boost: Some(Boost { direction, rapidity }), ..Self::default() }
    }

    pub fn rotation(angle: f64) -> Self {
        Self { rotation: angle, ..Self::default() }
    }

    pub fn tcp() -> Self {
        Self { tcp: true, ..Self::default() }
    }

    pub fn is_lorentz(&self) -> bool {
        self.translation == [0.0; 3]
    }

    fn validate(&self) -> Result<()> {
        if let Some(b) = self.boost {
            if b.direction != 1 && b.direction != 2 {
                return Err(Error::Domain(format!("boost direction must be 1 or 2, got {}", b.direction)));
            }
        }
        Ok(())
    }

    /// Whole quarter turns, when the angle is exactly one.
    fn quarter_turns(&self) -> Option<i64> {
        let k = (self.rotation / FRAC_PI_2).round();
        (k * FRAC_PI_2 == self.rotation).then_some(k as i64)
    }

    fn rotation_matrix(&self) -> Mat3 {
        let (s, c) = match self.quarter_turns() {
            Some(k) => [(0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0)][k.rem_euclid(4) as usize],
            None => self.rotation.sin_cos(),
        };
        [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
    }

    fn boost_matrix(&self) -> Mat3 {
        match self.boost {
            None => IDENTITY3,
            Some(b) if b.rapidity == 0.0 => IDENTITY3,
            Some(b) => {
                let (ch, sh) = (b.rapidity.cosh(), b.rapidity.sinh());
                let mut m = IDENTITY3;
                m[0][0] = ch;
                m[b.direction][b.direction] = ch;
                m[0][b.direction] = sh;
                m[b.direction][0] = sh;
                m
            }
        }
    }

    fn tcp_matrix(&self) -> Mat3 {
        if self.tcp {
            [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]
        } else {
            IDENTITY3
        }
    }

    /// Homogeneous part acting on `(x₀, x₁, x₂)`.
    pub fn lorentz_matrix(&self) -> Mat3 {
        mat_mul(&self.rotation_matrix(), &mat_mul(&self.boost_matrix(), &self.tcp_matrix()))
    }

    /// Inverse of the homogeneous part: `j⁻¹ B⁻¹ R⁻¹`.
    pub fn lorentz_inverse(&self) -> Mat3 {
        let inv = Self {
            boost: self.boost.map(|b| Boost { rapidity: -b.rapidity, ..b }),
            rotation: -self.rotation,
            translation: [0.0; 3],
            tcp: false,
        };
        mat_mul(&self.tcp_matrix(), &mat_mul(&inv.boost_matrix(), &inv.rotation_matrix()))
    }

    pub fn act_on_point(&self, x: &[f64; 3]) -> [f64; 3] {
        let y = mat_vec(&self.lorentz_matrix(), x);
        [0, 1, 2].map(|i| y[i] + self.translation[i])
    }
}

/// `t(x) = e^{i(x₀p₀ - x₁p₁ - x₂p₂)}`: in each slice a rapidity phase with
/// `λ = m⊥(x₀+x₁)/2`, `ρ = m⊥(x₀-x₁)/2`, times `e^{-ix₂p₂}`. Pointwise, so exact on the grid.
pub fn translation_apply(x: [f64; 3], f: &State2D) -> Result<State2D> {
    if x == [0.0; 3] {
        return Ok(f.clone());
    }
    let g = f.grid;
    let one = Complex64::new(1.0, 0.0);
    f.map_slices(|j, s| {
        let (lambda, rho) = light_cone_coeffs(&g, j, &x);
        let phase = Complex64::from_polar(1.0, -x[2] * g.p2(j));
        Ok(OperatorExpr::NuMult(Symbol::LrPhase { a: one, lambda, rho }).apply(s)?.scale(phase))
    })
}

fn light_cone_coeffs(g: &MomentumGrid2D, j: usize, x: &[f64; 3]) -> (f64, f64) {
    let mp = g.m_perp(j);
    (mp * (x[0] + x[1]) / 2.0, mp * (x[0] - x[1]) / 2.0)
}

/// Fraction of the weight of `f` where the phase of `t(x)` advances by more than π/4 per
/// rapidity step. Diagnostic only.
pub fn translation_unresolved_weight(x: [f64; 3], f: &State2D) -> Result<f64> {
    let total = f.norm();
    if total == 0.0 {
        return Ok(0.0);
    }
    let mut bad: f64 = 0.0;
    for (j, s) in f.slices.iter().enumerate() {
        let (lambda, rho) = light_cone_coeffs(&f.grid, j, &x);
        bad += (unresolved_weight(s, 1.0, lambda, rho)? * s.norm()).powi(2);
    }
    Ok(bad.sqrt() / total)
}

/// `j`: `f(ν, p₂) ↦ conj f(ν, -p₂)`.
fn tcp_apply(f: &State2D) -> Result<State2D> {
    let mut cols = f.nu_samples()?;
    cols.reverse();
    for c in &mut cols {
        for z in c.iter_mut() {
            *z = z.conj();
        }
    }
    State2D::from_nu_samples(f.grid, cols)
}

/// Boost along direction 1: `f(ν) ↦ f(ν + β)`, exact as `e^{-iβκ}` in each slice.
fn boost1_apply(beta: f64, f: &State2D) -> Result<State2D> {
    let m = OperatorExpr::KappaMult(Symbol::Exp { coeff: Complex64::new(0.0, -beta) });
    f.map_slices(|_, s| m.apply(s))
}

/// Rotation by π: `(ν, p₂) ↦ (-ν, -p₂)` as an index flip, periodic in ν so that the
/// matching flip `κ ↦ -κ` is exact too.
fn half_turn_apply(f: &State2D) -> Result<State2D> {
    let n = f.grid.rapidity.n_points;
    let mut cols = f.nu_samples()?;
    cols.reverse();
    for c in &mut cols {
        let old = c.clone();
        for k in 0..n {
            c[k] = old[(n - k) % n];
        }
    }
    State2D::from_nu_samples(f.grid, cols)
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Bicubic (Catmull-Rom) value of rapidity-representation samples at `(ν, p₂)`; zero
/// outside the lattice.
fn interpolate(grid: &MomentumGrid2D, cols: &[Vec<Complex64>], nu: f64, p2: f64) -> Complex64 {
    let n = grid.rapidity.n_points as i64;
    let u = (nu - grid.rapidity.nu(0)) / grid.rapidity.nu_step();
    let v = (p2 - grid.p2(0)) / grid.p2_step();
    if !u.is_finite() || !v.is_finite() || u < -1.0 || v < -1.0 || u > n as f64 || v > grid.n_p2 as f64 {
        return Complex64::new(0.0, 0.0);
    }
    let (iu, iv) = (u.floor() as i64, v.floor() as i64);
    let (wu, wv) = (catmull_rom(u - iu as f64), catmull_rom(v - iv as f64));
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, wb) in wv.iter().enumerate() {
        let j = iv - 1 + b as i64;
        if j < 0 || j >= grid.n_p2 as i64 {
            continue;
        }
        for (a, wa) in wu.iter().enumerate() {
            let k = iu - 1 + a as i64;
            if k < 0 || k >= n {
                continue;
            }
            acc += cols[j as usize][k as usize] * (wa * wb);
        }
    }
    acc
}

/// Pullback `f ↦ f∘Λ⁻¹` for a homogeneous `Λ` by bicubic resampling in `(ν, p₂)`; the
/// measure is invariant so no Jacobian enters.
fn resample_apply(lambda_inv: &Mat3, f: &State2D) -> Result<State2D> {
    let g = f.grid;
    let cols = f.nu_samples()?;
    let mut out = vec![vec![Complex64::new(0.0, 0.0); g.rapidity.n_points]; g.n_p2];
    for (j, col) in out.iter_mut().enumerate() {
        for (k, z) in col.iter_mut().enumerate() {
            // Momenta transform like the contravariant coordinates.
            let p = g.momentum(k, j);
            let q = mat_vec(lambda_inv, &p);
            let mp = g.mass.hypot(q[2]);
            let nu = (-q[1] / mp).asinh();
            *z = interpolate(&g, &cols, nu, q[2]);
        }
    }
    State2D::from_nu_samples(g, out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transported {
    pub state: State2D,
    /// `|‖U f‖ - ‖f‖| / ‖f‖`; zero for the exact actions.
    pub resampling_error: f64,
}

/// Applies `t(x) R(θ) B j`. Translations, `j`, direction-1 boosts and rotations by
/// multiples of π act exactly; other rotations and direction-2 boosts are resampled.
pub fn poincare_apply(e: &PoincareElement, f: &State2D, bound: f64) -> Result<Transported> {
    e.validate()?;
    let mut s = if e.tcp { tcp_apply(f)? } else { f.clone() };
    let mut resampled = false;
    match e.boost {
        Some(b) if b.rapidity != 0.0 && b.direction == 1 => s = boost1_apply(b.rapidity, &s)?,
        Some(b) if b.rapidity != 0.0 => {
            let inv = PoincareElement::boost(b.direction, -b.rapidity).boost_matrix();
            s = resample_apply(&inv, &s)?;
            resampled = true;
        }
        _ => {}
    }
    match e.quarter_turns().map(|k| k.rem_euclid(4)) {
        Some(0) => {}
        Some(2) => s = half_turn_apply(&s)?,
        _ => {
            s = resample_apply(&PoincareElement::rotation(-e.rotation).rotation_matrix(), &s)?;
            resampled = true;
        }
    }
    let resampling_error = if resampled && f.norm() > 0.0 { (s.norm() - f.norm()).abs() / f.norm() } else { 0.0 };
    if resampling_error > bound {
        return Err(Error::Resampling { err: resampling_error, bound });
    }
    let state = translation_apply(e.translation, &s)?;
    Ok(Transported { state, resampling_error })
}

/// Seed `g(κ, p₂) = g_κ(κ)·exp(-(p₂-q)²/(2s²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Seed2D {
    pub kappa: AnalyticVector,
    pub p2_center: f64,
    pub p2_width: f64,
}

impl Seed2D {
    fn profile(&self, p2: f64) -> f64 {
        (-(p2 - self.p2_center).powi(2) / (2.0 * self.p2_width * self.p2_width)).exp()
    }
}

/// Seeds with comparable wedge-vector terms, spread over a few `p₂` centers.
pub fn default_seeds(side: Side, widths: &[f64], p2_centers: &[f64], p2_width: f64) -> Vec<Seed2D> {
    let mut out = Vec::new();
    for (i, &q) in p2_centers.iter().enumerate() {
        for kv in crate::freefield1d::balanced_seeds(side, widths, 2) {
            let ph = Complex64::from_polar(1.0, 0.37 * i as f64);
            out.push(Seed2D { kappa: kv.scaled(ph), p2_center: q, p2_width });
        }
    }
    out
}

/// `J Δ^{±1/2}` on the 2d model: `e^{±πκ}` per slice, then conjugation with `κ ↦ -κ`,
/// `p₂ ↦ -p₂`.
fn tomita_2d(side: Side, f: &State2D) -> Result<State2D> {
    let sign = match side {
        Side::R => 1.0,
        Side::RPrime => -1.0,
    };
    let m = OperatorExpr::KappaMult(Symbol::Exp { coeff: Complex64::new(sign * PI, 0.0) });
    let d = f.map_slices(|_, s| m.apply(s))?;
    let mut cols: Vec<Vec<Complex64>> = d.slices.iter().map(|s| Ok(s.to_rep(Rep::Kappa)?.samples)).collect::<Result<_>>()?;
    cols.reverse();
    let n = f.grid.rapidity.n_points;
    let slices = cols
        .into_iter()
        .map(|c| {
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for j in 1..n {
                out[j] = c[n - j].conj();
            }
            StateVector::new(f.grid.rapidity, out, Rep::Kappa)
        })
        .collect::<Result<_>>()?;
    Ok(State2D { grid: f.grid, slices })
}

/// `g(κ, p₂) + e^{∓πκ}·conj g(-κ, -p₂)`, restricted to the mirror-symmetric window.
fn wedge_vector_2d(side: Side, seed: &Seed2D, grid: MomentumGrid2D) -> Result<State2D> {
    let g = grid.rapidity;
    let terms = wedge_vector(side, &seed.kappa);
    let direct = AnalyticSum(vec![terms.0[0]]).realize(g)?;
    let mirrored = AnalyticSum(vec![terms.0[1]]).realize(g)?;
    let w = grid.p2_step().sqrt();
    let slices = (0..grid.n_p2)
        .map(|j| {
            let p2 = grid.p2(j);
            let (a, b) = (seed.profile(p2) * w, seed.profile(-p2) * w);
            let mut s = direct.scale(Complex64::new(a, 0.0)).add(&mirrored.scale(Complex64::new(b, 0.0)))?;
            s.samples[0] = Complex64::new(0.0, 0.0);
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Ok(State2D { grid, slices })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WedgeSubspace2D {
    /// `W = Λ W_R`.
    pub wedge: PoincareElement,
    pub side: Side,
    pub basis: Vec<State2D>,
    /// Worst `‖S f - f‖/‖f‖` over the W_R basis before transport.
    pub fixed_point_residual: f64,
    pub resampling_error: f64,
}

fn build(side: Side, wedge: PoincareElement, seeds: &[Seed2D], grid: MomentumGrid2D, bound: f64) -> Result<WedgeSubspace2D> {
    if !wedge.is_lorentz() {
        return Err(Error::Domain("wedge vertex must pass through the origin (no translation part)".into()));
    }
    let mut basis = Vec::with_capacity(seeds.len());
    let mut fixed: f64 = 0.0;
    let mut resampling: f64 = 0.0;
    for seed in seeds {
        let f = wedge_vector_2d(side, seed, grid)?;
        let sf = tomita_2d(side, &f).map_err(|e| match e {
            Error::NonFinite(m) => Error::Domain(m),
            e => e,
        })?;
        fixed = fixed.max(sf.rel_diff(&f)?);
        let t = poincare_apply(&wedge, &f, bound)?;
        resampling = resampling.max(t.resampling_error);
        basis.push(t.state);
    }
    Ok(WedgeSubspace2D { wedge, side, basis, fixed_point_residual: fixed, resampling_error: resampling })
}

/// Basis of the wedge subspace for `W = Λ W_R`, transported from W_R.
pub fn build_wedge_subspace(wedge: PoincareElement, seeds: &[Seed2D], grid: MomentumGrid2D, bound: f64) -> Result<WedgeSubspace2D> {
    build(Side::R, wedge, seeds, grid, bound)
}

/// Basis of the symplectic complement of the same wedge subspace, built from the complementary
/// closed form and transported the same way.
pub fn build_wedge_complement(wedge: PoincareElement, seeds: &[Seed2D], grid: MomentumGrid2D, bound: f64) -> Result<WedgeSubspace2D> {
    build(Side::RPrime, wedge, seeds, grid, bound)
}

/// `x + W ⊂ W`, i.e. `Λ⁻¹x` in the closure of W_R (`y₁ ≥ |y₀|`). Exact for wedges reached
/// by `j`, direction-free quarter turns and no boost.
pub fn translate_into_wedge(wedge: &PoincareElement, x: &[f64; 3]) -> bool {
    let y = mat_vec(&wedge.lorentz_inverse(), x);
    y[1] >= y[0].abs()
}

/// `x` parallel to the vertex: `Λ⁻¹x` along `x̂₂`.
pub fn parallel_to_vertex(wedge: &PoincareElement, x: &[f64; 3]) -> bool {
    let y = mat_vec(&wedge.lorentz_inverse(), x);
    y[0] == 0.0 && y[1] == 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotonyReport {
    pub x: [f64; 3],
    pub inside: bool,
    pub residual: f64,
    /// Worst [`translation_unresolved_weight`] over the basis.
    pub unresolved_weight: f64,
}

/// Worst bilinear residual of `t(x) f`, `f` in the wedge basis, against the complement basis.
/// Out-of-wedge `x` are reported with `inside = false` rather than rejected.
pub fn isotony_residual(
    w: &WedgeSubspace2D,
    x: [f64; 3],
    complement: &WedgeSubspace2D,
) -> Result<IsotonyReport> {
    let mut worst: f64 = 0.0;
    let mut unresolved: f64 = 0.0;
    for f in &w.basis {
        let moved = translation_apply(x, f)?;
        worst = worst.max(bilinear_residual_2d(&moved, &complement.basis)?);
        unresolved = unresolved.max(translation_unresolved_weight(x, f)?);
    }
    Ok(IsotonyReport { x, inside: translate_into_wedge(&w.wedge, &x), residual: worst, unresolved_weight: unresolved })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexReport {
    pub x: [f64; 3],
    pub parallel: bool,
    pub residual: f64,
}

/// Invariance both ways: `t(x) r(W)` against the complement and `t(x) r(W)'` against `r(W)`.
pub fn translation_vertex_invariance(
    w: &WedgeSubspace2D,
    complement: &WedgeSubspace2D,
    x: [f64; 3],
) -> Result<VertexReport> {
    let forward = isotony_residual(w, x, complement)?.residual;
    let mut backward: f64 = 0.0;
    for f in &complement.basis {
        let moved = translation_apply(x, f)?;
        backward = backward.max(bilinear_residual_2d(&moved, &w.basis)?);
    }
    Ok(VertexReport { x, parallel: parallel_to_vertex(&w.wedge, &x), residual: forward.max(backward) })
}

/// Minimum of `x₀p₀ - x·p` over the grid momenta.
pub fn spectral_minimum(grid: &MomentumGrid2D, x: [f64; 3]) -> f64 {
    let mut min = f64::INFINITY;
    for j in 0..grid.n_p2 {
        let mp = grid.m_perp(j);
        for k in 0..grid.rapidity.n_points {
            let nu = grid.rapidity.nu(k);
            // (x₀+x₁)/2·e^ν + (x₀-x₁)/2·e^{-ν} avoids cancelling p₀ against p₁.
            let light = mp * (0.5 * (x[0] + x[1]) * nu.exp() + 0.5 * (x[0] - x[1]) * (-nu).exp());
            min = min.min(light - x[2] * grid.p2(j));
        }
    }
    min
}

/// `‖U(Λ) t(x) U(Λ)⁻¹ f - t(Λx) f‖ / ‖f‖`, with `U(Λ)⁻¹ f` computed by applying the inverse
/// element.
pub fn covariance_residual(lorentz: &PoincareElement, x: [f64; 3], f: &State2D, bound: f64) -> Result<f64> {
    if !lorentz.is_lorentz() || lorentz.tcp {
        return Err(Error::Domain("covariance check takes a boost or rotation".into()));
    }
    let inverse = PoincareElement {
        boost: lorentz.boost.map(|b| Boost { rapidity: -b.rapidity, ..b }),
        rotation: 0.0,
        translation: [0.0; 3],
        tcp: false,
    };
    let unrotate = PoincareElement::rotation(-lorentz.rotation);
    let back = poincare_apply(&inverse, &poincare_apply(&unrotate, f, bound)?.state, bound)?;
    let moved = translation_apply(x, &back.state)?;
    let lhs = poincare_apply(lorentz, &moved, bound)?.state;
    let rhs = translation_apply(lorentz.act_on_point(&x), f)?;
    lhs.rel_diff(&rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> MomentumGrid2D {
        MomentumGrid2D::new(1.0, n, 24.0, n, 4.0).unwrap()
    }

    fn seeds(side: Side) -> Vec<Seed2D> {
        default_seeds(side, &[0.8, 1.2], &[-0.3, 0.4], 0.5)
    }

    fn wedges(n: usize) -> (WedgeSubspace2D, WedgeSubspace2D) {
        let g = grid(n);
        let e = PoincareElement::identity();
        (
            build_wedge_subspace(e, &seeds(Side::R), g, DEFAULT_RESAMPLING_BOUND).unwrap(),
            build_wedge_complement(e, &seeds(Side::RPrime), g, DEFAULT_RESAMPLING_BOUND).unwrap(),
        )
    }

    fn probe(g: MomentumGrid2D) -> State2D {
        State2D::from_momentum_fn(g, |p| {
            let nu = (-p[1] / g.mass.hypot(p[2])).asinh();
            Complex64::from_polar((-2.0 * (nu - 0.2).powi(2) - 2.0 * (p[2] - 0.3).powi(2)).exp(), 0.7 * nu)
        })
    }

    pub fn in_wedge() -> Vec<[f64; 3]> {
        vec![
            [0.5, 0.5, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 0.5, 0.0],
            [0.0, 1.0, 0.3],
            [0.3, 0.8, -0.5],
            [-0.4, 0.6, 0.0],
            [-0.5, 0.5, 0.2],
            [0.2, 1.2, 1.0],
            [0.0, 0.2, -1.0],
            [0.7, 0.9, 0.4],
        ]
    }

    pub fn out_of_wedge() -> Vec<[f64; 3]> {
        vec![
            [-1.0, -1.0, 0.0],
            [-0.5, -0.5, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
            [1.0, -1.0, 0.0],
            [-1.0, 0.0, 0.3],
            [1.0, 0.2, 0.0],
            [0.0, -0.8, 0.5],
            [-1.2, -0.6, 0.0],
            [0.8, -0.4, -0.3],
        ]
    }

    #[test]
    fn grid_and_measure() {
        let g = grid(64);
        assert_eq!(g.p2(0), -g.p2(63));
        let p = g.momentum(10, 7);
        assert!((p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - 1.0).abs() < 1e-12);
        assert!(MomentumGrid2D::new(0.0, 64, 24.0, 64, 4.0).is_err());
    }

    #[test]
    fn identity_and_translation_norm() {
        let g = grid(64);
        let f = probe(g);
        let id = poincare_apply(&PoincareElement::identity(), &f, DEFAULT_RESAMPLING_BOUND).unwrap();
        assert_eq!(id.state, f);
        let t = poincare_apply(&PoincareElement::translation([0.3, -0.2, 0.7]), &f, DEFAULT_RESAMPLING_BOUND).unwrap();
        assert!((t.state.norm() - f.norm()).abs() <= 1e-12 * f.norm());
    }

    #[test]
    fn boost_round_trips() {
        let g = grid(64);
        let f = probe(g);
        for dir in [1, 2] {
            let there = poincare_apply(&PoincareElement::boost(dir, 0.4), &f, DEFAULT_RESAMPLING_BOUND).unwrap();
            let back = poincare_apply(&PoincareElement::boost(dir, -0.4), &there.state, DEFAULT_RESAMPLING_BOUND).unwrap();
            let err = back.state.rel_diff(&f).unwrap();
            let tol = if dir == 1 { 1e-12 } else { 1e-2 };
            assert!(err <= tol, "direction {dir}: {err:.3e}");
        }
        let r = poincare_apply(&PoincareElement::rotation(0.3), &f, DEFAULT_RESAMPLING_BOUND).unwrap();
        let back = poincare_apply(&PoincareElement::rotation(-0.3), &r.state, DEFAULT_RESAMPLING_BOUND).unwrap();
        assert!(back.state.rel_diff(&f).unwrap() <= 1e-2);
        let tiny = poincare_apply(&PoincareElement::rotation(0.3), &f, 1e-14);
        assert!(matches!(tiny, Err(Error::Resampling { .. })));
    }

    #[test]
    fn boost_one_matches_pullback() {
        // The exact rapidity shift against interpolation of the same pullback.
        let g = grid(128);
        let f = probe(g);
        let exact = poincare_apply(&PoincareElement::boost(1, 0.3), &f, DEFAULT_RESAMPLING_BOUND).unwrap().state;
        let inv = PoincareElement::boost(1, -0.3).boost_matrix();
        let interp = resample_apply(&inv, &f).unwrap();
        assert!(exact.rel_diff(&interp).unwrap() < 1e-2);
    }

    #[test]
    fn wedge_fixed_points() {
        let (r, rp) = wedges(64);
        assert!(r.fixed_point_residual <= 1e-6, "{:.3e}", r.fixed_point_residual);
        assert!(rp.fixed_point_residual <= 1e-6);
        let mut worst: f64 = 0.0;
        for f in &r.basis {
            worst = worst.max(bilinear_residual_2d(f, &rp.basis).unwrap());
        }
        assert!(worst < 1e-10, "{worst:.3e}");
    }

    #[test]
    fn left_wedge_is_the_complement() {
        let g = grid(64);
        let (r, rp) = wedges(64);
        let left = build_wedge_subspace(PoincareElement::rotation(PI), &seeds(Side::R), g, DEFAULT_RESAMPLING_BOUND).unwrap();
        let mut pairing: f64 = 0.0;
        for f in &left.basis {
            pairing = pairing.max(bilinear_residual_2d(f, &r.basis).unwrap());
        }
        assert!(pairing <= 1e-3, "{pairing:.3e}");
        // W_L vectors have the complementary closed form built from the reflected seeds.
        let reflected: Vec<Seed2D> = seeds(Side::R)
            .iter()
            .map(|s| Seed2D {
                kappa: AnalyticVector::new(-s.kappa.center, s.kappa.width, 0, s.kappa.phase),
                p2_center: -s.p2_center,
                p2_width: s.p2_width,
            })
            .collect();
        let explicit = build_wedge_complement(PoincareElement::identity(), &reflected, g, DEFAULT_RESAMPLING_BOUND).unwrap();
        let gap = span_gap_2d(&left.basis, &explicit.basis).unwrap();
        assert!(gap <= 1e-3, "{gap:.3e}");
        assert!(span_gap_2d(&r.basis, &explicit.basis).unwrap() > 0.5);
        let _ = rp;
        let via_tcp = build_wedge_subspace(PoincareElement::tcp(), &seeds(Side::R), g, DEFAULT_RESAMPLING_BOUND).unwrap();
        // j maps W_R onto W_L as well.
        for f in &via_tcp.basis {
            assert!(bilinear_residual_2d(f, &r.basis).unwrap() < 1e-10);
        }
        assert!(span_gap_2d(&via_tcp.basis, &r.basis).unwrap() > 0.5);
    }

    #[test]
    fn rotated_wedge_is_transport() {
        let g = grid(64);
        let (r, _) = wedges(64);
        let rot = build_wedge_subspace(PoincareElement::rotation(FRAC_PI_2), &seeds(Side::R), g, 0.05).unwrap();
        for (a, b) in rot.basis.iter().zip(&r.basis) {
            let t = poincare_apply(&PoincareElement::rotation(FRAC_PI_2), b, 0.05).unwrap().state;
            assert_eq!(&t, a);
        }
        assert!(build_wedge_subspace(PoincareElement::translation([0.0, 1.0, 0.0]), &seeds(Side::R), g, 0.05).is_err());
    }

    #[test]
    fn geometry_is_exact() {
        let wr = PoincareElement::identity();
        assert!(translate_into_wedge(&wr, &[1.0, 1.0, 0.0]));
        assert!(!translate_into_wedge(&wr, &[-1.0, -1.0, 0.0]));
        assert!(translate_into_wedge(&wr, &[0.0, 0.0, 5.0]));
        let wl = PoincareElement::rotation(PI);
        assert!(translate_into_wedge(&wl, &[0.0, -1.0, 0.0]));
        assert!(!translate_into_wedge(&wl, &[0.0, 1.0, 0.0]));
        assert!(parallel_to_vertex(&wr, &[0.0, 0.0, 1.0]));
        assert!(!parallel_to_vertex(&wr, &[1.0, 0.0, 0.0]));
        let quarter = PoincareElement::rotation(FRAC_PI_2);
        assert!(parallel_to_vertex(&quarter, &[0.0, -1.0, 0.0]));
        for x in in_wedge() {
            assert!(translate_into_wedge(&wr, &x));
        }
        for x in out_of_wedge() {
            assert!(!translate_into_wedge(&wr, &x));
        }
    }

    #[test]
    fn isotony_in_and_out() {
        let (r, rp) = wedges(64);
        let zero = isotony_residual(&r, [0.0; 3], &rp).unwrap();
        assert!(zero.residual <= 1e-12);
        for x in in_wedge() {
            let rep = isotony_residual(&r, x, &rp).unwrap();
            assert!(rep.inside && rep.residual <= 1e-3, "{x:?}: {:.3e}", rep.residual);
        }
        for x in out_of_wedge() {
            let rep = isotony_residual(&r, x, &rp).unwrap();
            assert!(!rep.inside && rep.residual >= 0.05, "{x:?}: {:.3e}", rep.residual);
        }
    }

    #[test]
    fn isotony_improves_with_refinement() {
        let (r64, rp64) = wedges(64);
        let (r128, rp128) = wedges(128);
        for x in [[1.0, 1.0, 0.0], [0.3, 0.8, -0.5]] {
            let a = isotony_residual(&r64, x, &rp64).unwrap().residual;
            let b = isotony_residual(&r128, x, &rp128).unwrap().residual;
            assert!(b <= a * 1.1 + 1e-15, "{x:?}: {a:.3e} -> {b:.3e}");
        }
    }

    #[test]
    fn vertex_translations() {
        let (r, rp) = wedges(64);
        assert!(translation_vertex_invariance(&r, &rp, [0.0; 3]).unwrap().residual <= 1e-12);
        let v = translation_vertex_invariance(&r, &rp, [0.0, 0.0, 1.0]).unwrap();
        assert!(v.parallel && v.residual <= 1e-3, "{:.3e}", v.residual);
        let t = translation_vertex_invariance(&r, &rp, [1.0, 0.0, 0.0]).unwrap();
        assert!(!t.parallel && t.residual >= 0.05, "{:.3e}", t.residual);
    }

    #[test]
    fn spectral_condition_in_forward_cone() {
        let g = grid(64);
        for k in 0..20 {
            let th = 0.31 * k as f64;
            let r = 1.0 + 0.1 * k as f64;
            // On the cone for even k, strictly inside for odd k.
            let x0 = if k % 2 == 0 { r } else { 1.3 * r };
            assert!(spectral_minimum(&g, [x0, r * th.cos(), r * th.sin()]) >= -1e-12);
        }
        assert!(spectral_minimum(&g, [0.0, 1.0, 0.0]) < 0.0);
    }

    #[test]
    fn covariance_of_translations() {
        let g = grid(64);
        let f = probe(g);
        let b1 = covariance_residual(&PoincareElement::boost(1, 0.3), [0.4, 0.2, 0.1], &f, 0.05).unwrap();
        assert!(b1 <= 1e-10, "{b1:.3e}");
        let rot = covariance_residual(&PoincareElement::rotation(0.4), [0.4, 0.2, 0.1], &f, 0.05).unwrap();
        assert!(rot <= 2e-2, "{rot:.3e}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn translations_compose(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0) {
            let g = grid(64);
            let f = probe(g);
            let x = [a, b, c];
            let y = [0.2, -0.1, 0.3];
            let lhs = translation_apply(x, &translation_apply(y, &f).unwrap()).unwrap();
            let rhs = translation_apply([a + 0.2, b - 0.1, c + 0.3], &f).unwrap();
            prop_assert!(lhs.rel_diff(&rhs).unwrap() < 1e-12);
        }
    }
}
