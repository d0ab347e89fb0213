//! Exact model of the modular commutation relations: `Δ^{iz}` and `V(λ)` multiply in κ,
//! `U(a)` and `T(x)` multiply in ν, `J` is the conjugation flip.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops_core::{GridSpec, OperatorExpr, Rep, StateVector, Symbol};

/// Relative edge magnitude below which a realized vector counts as decayed.
pub const EDGE_DECAY_TOL: f64 = 1e-14;
pub const DEFAULT_ALIAS_WEIGHT_TOL: f64 = 1e-6;

/// Physicists' Hermite polynomial.
pub fn hermite(d: u32, y: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, 2.0 * y);
    match d {
        0 => h0,
        1 => h1,
        _ => {
            for k in 1..d {
                let h2 = 2.0 * y * h1 - 2.0 * k as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    }
}

fn factorial(d: u32) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// `amplitude·phase·H_d((κ-c)/w)·exp(-(κ-c)²/(2w²) + modulation·κ)`.
///
/// `modulation` carries the closed-form action of `Δ^{iz}` (it adds `2πiz`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticVector {
    pub center: f64,
    pub width: f64,
    pub hermite_degree: u32,
    pub phase: Complex64,
    pub amplitude: f64,
    pub modulation: Complex64,
}

impl AnalyticVector {
    /// Unit L2 norm.
    pub fn new(center: f64, width: f64, hermite_degree: u32, phase: Complex64) -> Self {
        let norm2 = width * PI.sqrt() * 2f64.powi(hermite_degree as i32) * factorial(hermite_degree);
        Self { center, width, hermite_degree, phase, amplitude: norm2.sqrt().recip(), modulation: Complex64::new(0.0, 0.0) }
    }

    pub fn gaussian(center: f64, width: f64) -> Self {
        Self::new(center, width, 0, Complex64::new(1.0, 0.0))
    }

    pub fn value(&self, kappa: f64) -> Complex64 {
        let y = (kappa - self.center) / self.width;
        let h = hermite(self.hermite_degree, y);
        if h == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let expo = Complex64::new(-0.5 * y * y, 0.0) + self.modulation * kappa;
        self.phase * (self.amplitude * h) * expo.exp()
    }

    /// Multiply by `e^{ζκ}`.
    pub fn modulate(&self, zeta: Complex64) -> Self {
        Self { modulation: self.modulation + zeta, ..*self }
    }

    /// `Δ^{iz}` in closed form: multiplication by `e^{2πizκ}`.
    pub fn delta_power(&self, z: Complex64) -> Self {
        self.modulate(Complex64::new(0.0, 2.0 * PI) * z)
    }

    /// `κ ↦ conj v(-κ)`.
    pub fn flip_conj(&self) -> Self {
        let sign = if self.hermite_degree.is_multiple_of(2) { 1.0 } else { -1.0 };
        Self {
            center: -self.center,
            phase: self.phase.conj() * sign,
            modulation: -self.modulation.conj(),
            ..*self
        }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let r = c.norm();
        Self { amplitude: self.amplitude * r, phase: self.phase * Complex64::from_polar(1.0, c.arg()), ..*self }
    }

    pub fn realize(&self, grid: GridSpec) -> Result<StateVector> {
        AnalyticSum(vec![*self]).realize(grid)
    }
}

/// Finite sum of analytic vectors, closed under `Δ^{iz}` and the conjugation flip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSum(pub Vec<AnalyticVector>);

impl AnalyticSum {
    pub fn value(&self, kappa: f64) -> Complex64 {
        self.0.iter().map(|t| t.value(kappa)).sum()
    }

    pub fn delta_power(&self, z: Complex64) -> Self {
        AnalyticSum(self.0.iter().map(|t| t.delta_power(z)).collect())
    }

    pub fn flip_conj(&self) -> Self {
        AnalyticSum(self.0.iter().map(|t| t.flip_conj()).collect())
    }

    /// Samples without the decay check.
    pub fn sample(&self, grid: GridSpec) -> Result<StateVector> {
        let v = StateVector::from_kappa_fn(grid, |k| self.value(k));
        if !v.is_finite() {
            return Err(Error::Domain("analytic vector overflows on the window".into()));
        }
        Ok(v)
    }

    /// Samples, rejecting vectors that have not decayed at the window edge.
    pub fn realize(&self, grid: GridSpec) -> Result<StateVector> {
        let v = self.sample(grid)?;
        check_edge_decay(&v, "analytic vector")?;
        Ok(v)
    }
}

/// Edge samples must sit below `EDGE_DECAY_TOL` relative to the peak.
pub fn check_edge_decay(v: &StateVector, what: &str) -> Result<()> {
    let peak = v.max_abs();
    let n = v.samples.len();
    let edge = v.samples[0].norm().max(v.samples[n - 1].norm());
    if peak > 0.0 && edge > EDGE_DECAY_TOL * peak {
        return Err(Error::Domain(format!("{what}: edge/peak = {:.3e} exceeds {EDGE_DECAY_TOL:e}", edge / peak)));
    }
    Ok(())
}

/// Fraction of L2 weight of `v` (any rep) on ν points where the phase
/// `a·h(ν)` advances by more than π/4 per grid step.
pub fn unresolved_weight(v: &StateVector, a: f64, lambda: f64, rho: f64) -> Result<f64> {
    let g = v.grid;
    let t = v.to_rep(Rep::Nu)?;
    let total: f64 = t.samples.iter().map(|z| z.norm_sqr()).sum();
    if total == 0.0 || a == 0.0 {
        return Ok(0.0);
    }
    let dnu = g.nu_step();
    let bad: f64 = t
        .samples
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let nu = g.nu(*k);
            let slope = lambda * nu.exp() - rho * (-nu).exp();
            a.abs() * slope.abs() * dnu > PI / 4.0
        })
        .map(|(_, z)| z.norm_sqr())
        .sum();
    Ok((bad / total).sqrt())
}

/// The Schrödinger realization on a κ-window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModularModel {
    pub grid: GridSpec,
    pub alias_weight_tol: f64,
}

impl ModularModel {
    pub fn new(grid: GridSpec) -> Self {
        Self { grid, alias_weight_tol: DEFAULT_ALIAS_WEIGHT_TOL }
    }

    pub fn delta_power(&self, z: Complex64) -> OperatorExpr {
        OperatorExpr::KappaMult(Symbol::Exp { coeff: Complex64::new(0.0, 2.0 * PI) * z })
    }

    /// `U(a) = e^{iae^ν}`. Complex `a` with `Im a ≥ 0` gives the contraction continuation.
    pub fn lightlike(&self, a: Complex64) -> OperatorExpr {
        OperatorExpr::NuMult(Symbol::LrPhase { a, lambda: 1.0, rho: 0.0 })
    }

    pub fn conj_j(&self) -> OperatorExpr {
        OperatorExpr::ConjFlip
    }

    /// `V(λ) = Δ^{iλ/2π}`, built from `delta_power` itself.
    pub fn weyl_v(&self, lambda: f64) -> OperatorExpr {
        self.delta_power(Complex64::new(lambda / (2.0 * PI), 0.0))
    }

    /// `T(x) = e^{-ixP}` with `P = ν`.
    pub fn weyl_t(&self, x: f64) -> OperatorExpr {
        OperatorExpr::NuMult(Symbol::Exp { coeff: Complex64::new(0.0, -x) })
    }

    pub fn check_resolved(&self, v: &StateVector, a: f64, lambda: f64, rho: f64) -> Result<()> {
        let w = unresolved_weight(v, a, lambda, rho)?;
        if w > self.alias_weight_tol {
            return Err(Error::Resolution {
                what: format!("symbol a={a}, (lambda,rho)=({lambda},{rho})"),
                weight: w,
                tol: self.alias_weight_tol,
            });
        }
        Ok(())
    }

    pub fn delta_power_apply(&self, z: Complex64, v: &StateVector) -> Result<StateVector> {
        let out = self.delta_power(z).apply(v).map_err(|e| match e {
            Error::NonFinite(s) => Error::Domain(format!("delta power overflow: {s}")),
            e => e,
        })?;
        if z.im != 0.0 {
            check_edge_decay(&out.to_rep(Rep::Kappa)?, "delta power of non-analytic vector")?;
        }
        Ok(out)
    }

    pub fn lightlike_apply(&self, a: f64, v: &StateVector) -> Result<StateVector> {
        self.check_resolved(v, a, 1.0, 0.0)?;
        self.lightlike(Complex64::new(a, 0.0)).apply(v)
    }
}

/// `max_probe ||V(λ)T(x)v - e^{iλx}T(x)V(λ)v|| / ||v||`.
pub fn check_weyl_ccr(model: &ModularModel, lambda: f64, x: f64, probes: &[AnalyticVector]) -> Result<f64> {
    let vt = OperatorExpr::compose([model.weyl_v(lambda), model.weyl_t(x)]);
    let tv = OperatorExpr::compose([
        OperatorExpr::Scale(Complex64::from_polar(1.0, lambda * x)),
        model.weyl_t(x),
        model.weyl_v(lambda),
    ]);
    let mut worst: f64 = 0.0;
    for p in probes {
        let v = p.realize(model.grid)?;
        let r = vt.apply(&v)?.sub(&tv.apply(&v)?)?.norm() / v.norm();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// `max ||J A J v - B v|| / ||v||` over probes.
pub fn conjugation_residual(a: &OperatorExpr, b: &OperatorExpr, j: &OperatorExpr, probes: &[StateVector]) -> Result<f64> {
    let jaj = OperatorExpr::compose([j.clone(), a.clone(), j.clone()]);
    let mut worst: f64 = 0.0;
    for v in probes {
        worst = worst.max(jaj.apply(v)?.sub(&b.apply(v)?)?.norm() / v.norm());
    }
    Ok(worst)
}

/// Minimum Rayleigh quotient `<v|e^ν v>/<v|v>` over probes.
pub fn generator_rayleigh_min(probes: &[StateVector]) -> Result<f64> {
    let h = OperatorExpr::NuMult(Symbol::Exp { coeff: Complex64::new(1.0, 0.0) });
    let mut lo = f64::INFINITY;
    for v in probes {
        let q = v.inner(&h.apply(v)?)?.re / v.norm().powi(2);
        lo = lo.min(q);
    }
    Ok(lo)
}

/// Parameter box for random Gaussian-Hermite probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeFamily {
    pub centers: (f64, f64),
    pub widths: (f64, f64),
    pub max_degree: u32,
}

impl Default for ProbeFamily {
    /// Centers in [-2,2], widths in [0.5,2], degree ≤ 4.
    fn default() -> Self {
        Self { centers: (-2.0, 2.0), widths: (0.5, 2.0), max_degree: 4 }
    }
}

pub fn sample_probes(seed: u64, count: usize) -> Vec<AnalyticVector> {
    sample_probes_in(seed, count, ProbeFamily::default())
}

pub fn sample_probes_in(seed: u64, count: usize, fam: ProbeFamily) -> Vec<AnalyticVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let c = rng.random_range(fam.centers.0..=fam.centers.1);
            let w = rng.random_range(fam.widths.0..=fam.widths.1);
            let d = rng.random_range(0..=fam.max_degree);
            let ph = rng.random_range(0.0..2.0 * PI);
            AnalyticVector::new(c, w, d, Complex64::from_polar(1.0, ph))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvnReport {
    pub trivial_dim: usize,
    pub nontrivial_dim: usize,
    pub weyl_residual: f64,
}

/// Self-adjoint generator of a unitary `u = e^{i·a·H}` via the complex Schur form.
/// Requires `|a|·||H|| < π`.
pub fn unitary_generator(u: &DMatrix<Complex64>, a: f64) -> Result<DMatrix<Complex64>> {
    let schur = u.clone().schur();
    let (q, t) = schur.unpack();
    let n = u.nrows();
    let mut logd = DMatrix::zeros(n, n);
    for i in 0..n {
        logd[(i, i)] = Complex64::new(t[(i, i)].arg() / a, 0.0);
    }
    let h = &q * logd * q.adjoint();
    Ok((&h + h.adjoint()) * Complex64::new(0.5, 0.0))
}

/// Splits off the null space of the `U`-generator and checks the Weyl relation on the rest.
///
/// `v_samples` are `(λ, V(λ))`, `u_samples` are `(a, U(a))`; the generator is read off the
/// sample with smallest nonzero `|a|`. The Weyl residual is the worst relative Frobenius defect
/// of `V(λ)T(x) = e^{iλx}T(x)V(λ)` on the complement, over `v_samples × xs`.
pub fn svn_decompose(
    v_samples: &[(f64, DMatrix<Complex64>)],
    u_samples: &[(f64, DMatrix<Complex64>)],
    xs: &[f64],
    tol: f64,
) -> Result<SvnReport> {
    let (a, u) = u_samples
        .iter()
        .filter(|(a, _)| *a != 0.0)
        .min_by(|x, y| x.0.abs().partial_cmp(&y.0.abs()).unwrap())
        .ok_or_else(|| Error::ModelInconsistency("no U sample with a != 0".into()))?;
    let n = u.nrows();
    let h = unitary_generator(u, *a)?;
    let eig = h.symmetric_eigen();
    let mut comp_cols = Vec::new();
    let mut trivial = 0;
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        if e < -tol {
            return Err(Error::NotPositive { eig: e, tol });
        }
        if e.abs() < tol {
            trivial += 1;
        } else {
            comp_cols.push((i, e));
        }
    }
    let k = comp_cols.len();
    if k == 0 {
        return Ok(SvnReport { trivial_dim: n, nontrivial_dim: 0, weyl_residual: 0.0 });
    }
    let qc = DMatrix::from_columns(&comp_cols.iter().map(|(i, _)| eig.eigenvectors.column(*i).into_owned()).collect::<Vec<_>>());
    let logs: Vec<f64> = comp_cols.iter().map(|(_, e)| e.ln()).collect();
    let mut worst: f64 = 0.0;
    for &x in xs {
        let tx = DMatrix::from_diagonal(&DVector::from_iterator(k, logs.iter().map(|p| Complex64::from_polar(1.0, -x * p))));
        for (lambda, v) in v_samples {
            let vc = qc.adjoint() * v * &qc;
            let lhs = &vc * &tx;
            let rhs = &tx * &vc * Complex64::from_polar(1.0, lambda * x);
            worst = worst.max((lhs - rhs).norm() / (k as f64).sqrt());
        }
    }
    Ok(SvnReport { trivial_dim: trivial, nontrivial_dim: k, weyl_residual: worst })
}
