//! Checkers for the three-condition commutation theorems (plain and with a conjugation),
//! the boundary pairings F, G, H, K and the "two imply the third" harness.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops_core::{golden_section_min, GridSpec, OperatorExpr, Rep, StateVector, Symbol, DEFAULT_DENSE_CAP};
use crate::schrodinger::{unitary_generator, unresolved_weight, AnalyticVector, DEFAULT_ALIAS_WEIGHT_TOL};

/// Default gap between passing residuals and the residuals a control must exhibit.
pub const DEFAULT_SEPARATION_MARGIN: f64 = 0.05;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    A,
    AJ,
    B,
    C,
    CPrime,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Condition::A => "a",
            Condition::AJ => "a_j",
            Condition::B => "b",
            Condition::C => "c",
            Condition::CPrime => "c_prime",
        };
        f.write_str(s)
    }
}

/// Generator `λe^x + ρe^{-x}` acting by multiplication in `rep`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSymbol {
    pub rep: Rep,
    pub lambda: f64,
    pub rho: f64,
}

impl GroupSymbol {
    pub fn new(rep: Rep, lambda: f64, rho: f64) -> Self {
        Self { rep, lambda, rho }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut h = 0.0;
        if self.lambda != 0.0 {
            h += self.lambda * x.exp();
        }
        if self.rho != 0.0 {
            h += self.rho * (-x).exp();
        }
        h
    }

    fn points(&self, grid: GridSpec) -> Vec<f64> {
        match self.rep {
            Rep::Kappa => grid.kappas(),
            Rep::Nu => grid.nus(),
        }
    }

    /// Grid minimum refined by golden section between the neighbours of the best point.
    pub fn min_on(&self, grid: GridSpec) -> f64 {
        let xs = self.points(grid);
        let (k, best) = xs
            .iter()
            .map(|&x| self.eval(x))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if k == 0 || k == xs.len() - 1 {
            return best;
        }
        golden_section_min(|x| self.eval(x), xs[k - 1], xs[k + 1]).min(best)
    }

    pub fn max_abs_on(&self, grid: GridSpec) -> f64 {
        self.points(grid).iter().map(|&x| self.eval(x).abs()).fold(0.0, f64::max)
    }

    /// `e^{iζh}`; exactly the identity at `ζ = 0`.
    pub fn group(&self, zeta: Complex64) -> OperatorExpr {
        if zeta == Complex64::new(0.0, 0.0) {
            return OperatorExpr::Identity;
        }
        let s = Symbol::LrPhase { a: zeta, lambda: self.lambda, rho: self.rho };
        match self.rep {
            Rep::Kappa => OperatorExpr::KappaMult(s),
            Rep::Nu => OperatorExpr::NuMult(s),
        }
    }
}

/// The triple `(Δ, U(a), J)` on a κ-window. `Δ^{iz}` is always multiplication by
/// `e^{2πizκ}`; the group and the conjugation vary between the model and its controls.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationModel {
    pub label: String,
    pub grid: GridSpec,
    pub u_group: GroupSymbol,
    pub j: Option<OperatorExpr>,
    pub generator_symbol: Option<GroupSymbol>,
    pub alias_weight_tol: f64,
}

impl RelationModel {
    fn with_group(label: &str, grid: GridSpec, u: GroupSymbol) -> Self {
        Self {
            label: label.into(),
            grid,
            u_group: u,
            j: Some(OperatorExpr::ConjFlip),
            generator_symbol: Some(u),
            alias_weight_tol: DEFAULT_ALIAS_WEIGHT_TOL,
        }
    }

    /// `U(a) = e^{iae^ν}`, `J` the conjugation flip.
    pub fn schrodinger(grid: GridSpec) -> Self {
        Self::with_group("schrodinger", grid, GroupSymbol::new(Rep::Nu, 1.0, 0.0))
    }

    /// Generator `-e^ν`: scaling holds, positivity fails.
    pub fn negative_generator(grid: GridSpec) -> Self {
        Self::with_group("negative_generator", grid, GroupSymbol::new(Rep::Nu, -1.0, 0.0))
    }

    /// Generator `e^ν - e^{-ν}`.
    pub fn momentum(grid: GridSpec) -> Self {
        Self::with_group("momentum", grid, GroupSymbol::new(Rep::Nu, 1.0, -1.0))
    }

    /// `U(a) = e^{iae^κ}`: positive generator that commutes with `Δ`.
    pub fn commuting_kappa(grid: GridSpec) -> Self {
        Self::with_group("commuting_kappa", grid, GroupSymbol::new(Rep::Kappa, 1.0, 0.0))
    }

    pub fn on_grid(&self, grid: GridSpec) -> Self {
        Self { grid, ..self.clone() }
    }

    /// Same group, `J` replaced by conjugation without the flip.
    pub fn with_plain_conjugation(mut self) -> Self {
        self.label = format!("{}+plain_conj", self.label);
        self.j = Some(OperatorExpr::plain_conjugation());
        self
    }

    pub fn delta_power(&self, z: Complex64) -> OperatorExpr {
        OperatorExpr::KappaMult(Symbol::Exp { coeff: c(0.0, 2.0 * PI) * z })
    }

    pub fn u_group(&self, zeta: Complex64) -> OperatorExpr {
        self.u_group.group(zeta)
    }

    fn j_op(&self) -> Result<&OperatorExpr> {
        self.j
            .as_ref()
            .ok_or_else(|| Error::ModelInconsistency(format!("model {} has no conjugation", self.label)))
    }

    /// `U(ζ)v` after the resolution check. Complex `ζ` is accepted only where `e^{iζh}`
    /// is a contraction on the grid.
    pub fn u_apply(&self, zeta: Complex64, v: &StateVector) -> Result<StateVector> {
        let u = self.u_group;
        if zeta.im != 0.0 {
            let growth = u.points(self.grid).iter().map(|&x| -zeta.im * u.eval(x)).fold(f64::NEG_INFINITY, f64::max);
            if growth > 0.0 {
                return Err(Error::Domain(format!("U({zeta}) is not a contraction on the window")));
            }
        }
        if u.rep == Rep::Nu {
            let w = unresolved_weight(v, zeta.norm(), u.lambda, u.rho)?;
            if w > self.alias_weight_tol {
                return Err(Error::Resolution {
                    what: format!("U({zeta}) of model {}", self.label),
                    weight: w,
                    tol: self.alias_weight_tol,
                });
            }
        }
        self.u_group(zeta).apply(v)
    }

    /// `Δ^{iz}v` on a sampled vector; overflow is a domain violation.
    fn delta_apply(&self, z: Complex64, v: &StateVector) -> Result<StateVector> {
        self.delta_power(z).apply(v).map_err(|e| match e {
            Error::NonFinite(s) => Error::Domain(format!("delta power overflow: {s}")),
            e => e,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSample {
    pub params: BTreeMap<String, f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    pub samples: Vec<ConditionSample>,
}

impl ConditionReport {
    fn from_samples(condition: Condition, samples: Vec<ConditionSample>, tol: f64) -> Self {
        let residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
        Self { condition, residual, tol, pass: residual <= tol, samples }
    }
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// `Δ^{it}U(a)Δ^{-it} = U(e^{-2πt}a)` on probes, with `λ = 2πt`.
pub fn check_condition_a(
    m: &RelationModel,
    ts: &[f64],
    as_: &[f64],
    probes: &[AnalyticVector],
    tol: f64,
) -> Result<ConditionReport> {
    let mut samples = Vec::new();
    for (i, p) in probes.iter().enumerate() {
        let v = p.realize(m.grid)?;
        let norm = v.norm();
        for &t in ts {
            let shifted = p.delta_power(c(-t, 0.0)).realize(m.grid)?;
            for &a in as_ {
                let lhs = m.delta_apply(c(t, 0.0), &m.u_apply(c(a, 0.0), &shifted)?)?;
                let rhs = m.u_apply(c((-2.0 * PI * t).exp() * a, 0.0), &v)?;
                let r = lhs.sub(&rhs)?.norm() / norm;
                samples.push(ConditionSample {
                    params: params(&[("probe", i as f64), ("t", t), ("lambda", 2.0 * PI * t), ("a", a)]),
                    residual: r,
                });
            }
        }
    }
    Ok(ConditionReport::from_samples(Condition::A, samples, tol))
}

/// `JU(a)J = U(-a)` on probes.
pub fn check_condition_a_j(m: &RelationModel, as_: &[f64], probes: &[AnalyticVector], tol: f64) -> Result<ConditionReport> {
    let j = m.j_op()?;
    let mut samples = Vec::new();
    for (i, p) in probes.iter().enumerate() {
        let v = p.realize(m.grid)?;
        let jv = j.apply(&v)?;
        for &a in as_ {
            let lhs = j.apply(&m.u_apply(c(a, 0.0), &jv)?)?;
            let rhs = m.u_apply(c(-a, 0.0), &v)?;
            samples.push(ConditionSample {
                params: params(&[("probe", i as f64), ("a", a)]),
                residual: lhs.sub(&rhs)?.norm() / v.norm(),
            });
        }
    }
    Ok(ConditionReport::from_samples(Condition::AJ, samples, tol))
}

/// Positivity of the generator. The residual is `max(0, -min h) / max |h|`.
///
/// With a closed-form symbol the minimum is taken over the grid. Otherwise the generator is
/// read off a dense truncation of `U(a_probe)`; the worse of the Rayleigh minimum over
/// probes and the smallest eigenvalue is reported.
pub fn check_condition_b(m: &RelationModel, probes: &[AnalyticVector], tol: f64) -> Result<ConditionReport> {
    let samples = match m.generator_symbol {
        Some(sym) => {
            let lo = sym.min_on(m.grid);
            let scale = sym.max_abs_on(m.grid);
            let r = if scale > 0.0 { (-lo).max(0.0) / scale } else { 0.0 };
            vec![ConditionSample { params: params(&[("symbol_min", lo), ("symbol_max_abs", scale)]), residual: r }]
        }
        None => {
            let h = dense_generator(m)?;
            let eig = h.symmetric_eigenvalues();
            let lo_eig = eig.iter().copied().fold(f64::INFINITY, f64::min);
            let scale = eig.iter().map(|e| e.abs()).fold(0.0, f64::max);
            let mut lo_ray = f64::INFINITY;
            for p in probes {
                let v = p.realize(m.grid)?;
                let x = nalgebra::DVector::from_vec(v.to_rep(Rep::Kappa)?.samples);
                let q = (x.adjoint() * &h * &x)[(0, 0)].re / x.norm_squared();
                lo_ray = lo_ray.min(q);
            }
            let lo = lo_ray.min(lo_eig);
            let r = if scale > 0.0 { (-lo).max(0.0) / scale } else { 0.0 };
            vec![ConditionSample {
                params: params(&[("rayleigh_min", lo_ray), ("eigen_min", lo_eig), ("eigen_max_abs", scale)]),
                residual: r,
            }]
        }
    };
    Ok(ConditionReport::from_samples(Condition::B, samples, tol))
}

/// Generator of a dense truncation of `U`, from the principal logarithm of `U(a)`.
/// `a` is halved until `U(a)` and `U(a/2)` give the same generator, i.e. no eigenphase wraps.
fn dense_generator(m: &RelationModel) -> Result<nalgebra::DMatrix<Complex64>> {
    let gen = |a: f64| -> Result<nalgebra::DMatrix<Complex64>> {
        let u = m.u_group(c(a, 0.0)).materialize(m.grid, DEFAULT_DENSE_CAP)?;
        unitary_generator(&u.matrix, a)
    };
    let mut a = 1e-2;
    let mut prev = gen(a)?;
    for _ in 0..60 {
        a /= 2.0;
        let next = gen(a)?;
        if (&next - &prev).norm() <= 1e-6 * next.norm() {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::ModelInconsistency("dense generator did not stabilise under halving a".into()))
}

fn half_sided(
    m: &RelationModel,
    as_: &[f64],
    probes: &[AnalyticVector],
    tol: f64,
    with_j: bool,
) -> Result<ConditionReport> {
    let half = c(0.0, -0.5);
    let j = if with_j { Some(m.j_op()?) } else { None };
    let mut samples = Vec::new();
    for (i, p) in probes.iter().enumerate() {
        let v = p.realize(m.grid)?;
        let dv = p.delta_power(half).realize(m.grid)?;
        let rhs_in = match j {
            Some(j) => j.apply(&dv)?,
            None => dv.clone(),
        };
        for &a in as_ {
            let mut lhs = m.delta_apply(half, &m.u_apply(c(a, 0.0), &v)?)?;
            let rhs_a = if with_j { a } else { -a };
            let rhs = m.u_apply(c(rhs_a, 0.0), &rhs_in)?;
            if let Some(j) = j {
                lhs = j.apply(&lhs)?;
            }
            samples.push(ConditionSample {
                params: params(&[("probe", i as f64), ("a", a)]),
                residual: lhs.sub(&rhs)?.norm() / dv.norm(),
            });
        }
    }
    let cond = if with_j { Condition::CPrime } else { Condition::C };
    Ok(ConditionReport::from_samples(cond, samples, tol))
}

/// `Δ^{1/2}U(a)ψ = U(-a)Δ^{1/2}ψ`, relative to `‖Δ^{1/2}ψ‖`.
pub fn check_condition_c(m: &RelationModel, as_: &[f64], probes: &[AnalyticVector], tol: f64) -> Result<ConditionReport> {
    half_sided(m, as_, probes, tol, false)
}

/// `JΔ^{1/2}U(a)ψ = U(a)JΔ^{1/2}ψ`, relative to `‖Δ^{1/2}ψ‖`.
pub fn check_condition_c_prime(m: &RelationModel, as_: &[f64], probes: &[AnalyticVector], tol: f64) -> Result<ConditionReport> {
    half_sided(m, as_, probes, tol, true)
}

/// Boundary pairings. `g`, `h`, `k` are `None` where their group element is not a
/// contraction (non-real `w`) or where the model has no conjugation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryValues {
    pub f: Complex64,
    pub g: Option<Complex64>,
    pub h: Option<Complex64>,
    pub k: Option<Complex64>,
}

struct Pairing {
    bra: StateVector,
    ket: StateVector,
}

impl Pairing {
    fn new(psi: &AnalyticVector, phi: &AnalyticVector, z: Complex64, grid: GridSpec) -> Result<Self> {
        Ok(Self { bra: psi.delta_power(z.conj()).realize(grid)?, ket: phi.delta_power(z).realize(grid)? })
    }

    fn with_u(&self, m: &RelationModel, zeta: Complex64) -> Result<Complex64> {
        self.bra.inner(&m.u_apply(zeta, &self.ket)?)
    }

    /// `<bra|J U(ζ) J ket>`.
    fn with_juj(&self, m: &RelationModel, j: &OperatorExpr, zeta: Complex64) -> Result<Complex64> {
        let inner = m.u_apply(zeta, &j.apply(&self.ket)?)?;
        self.bra.inner(&j.apply(&inner)?)
    }
}

/// `F(z,w) = <Δ^{i z̄}ψ|U(e^{2πw})Δ^{iz}φ>` alone.
pub fn boundary_f(psi: &AnalyticVector, phi: &AnalyticVector, z: Complex64, w: Complex64, m: &RelationModel) -> Result<Complex64> {
    Pairing::new(psi, phi, z, m.grid)?.with_u(m, (2.0 * PI * w).exp())
}

/// `F`, `G = <..|U(-e^{2πw})..>`, `H = <..|JU(e^{2πw̄})J..>`, `K = <..|JU(-e^{2πw̄})J..>`.
pub fn eval_boundary_functions(
    psi: &AnalyticVector,
    phi: &AnalyticVector,
    z: Complex64,
    w: Complex64,
    m: &RelationModel,
) -> Result<BoundaryValues> {
    let pair = Pairing::new(psi, phi, z, m.grid)?;
    let e = (2.0 * PI * w).exp();
    let f = pair.with_u(m, e)?;
    if w.im != 0.0 {
        return Ok(BoundaryValues { f, g: None, h: None, k: None });
    }
    let g = Some(pair.with_u(m, -e)?);
    let (h, k) = match &m.j {
        Some(j) => {
            let eb = (2.0 * PI * w.conj()).exp();
            (Some(pair.with_juj(m, j, eb)?), Some(pair.with_juj(m, j, -eb)?))
        }
        None => (None, None),
    };
    Ok(BoundaryValues { f, g, h, k })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// Smallest `‖Δ^{Im z}ψ‖·‖Δ^{-Im z}φ‖ - |F(z,w)|` over samples.
    pub min_margin: f64,
    pub samples: Vec<ConditionSample>,
}

/// The strip bound `|F(z,w)| ≤ ‖Δ^{Im z}ψ‖·‖Δ^{-Im z}φ‖` at real `w`.
pub fn check_f_bound(
    psi: &AnalyticVector,
    phi: &AnalyticVector,
    points: &[(Complex64, f64)],
    m: &RelationModel,
) -> Result<BoundReport> {
    let mut samples = Vec::new();
    let mut min_margin = f64::INFINITY;
    for &(z, w) in points {
        let f = boundary_f(psi, phi, z, c(w, 0.0), m)?;
        let s = z.im;
        let np = psi.delta_power(c(0.0, -s)).realize(m.grid)?.norm();
        let nf = phi.delta_power(c(0.0, s)).realize(m.grid)?.norm();
        let margin = np * nf - f.norm();
        min_margin = min_margin.min(margin);
        samples.push(ConditionSample {
            params: params(&[("re_z", z.re), ("im_z", z.im), ("w", w), ("bound", np * nf), ("abs_f", f.norm())]),
            residual: margin,
        });
    }
    Ok(BoundReport { min_margin, samples })
}

/// `max |F(z,w) - F(0,z+w)|` over the sampled pairs.
pub fn check_f_translation_identity(
    psi: &AnalyticVector,
    phi: &AnalyticVector,
    points: &[(Complex64, Complex64)],
    m: &RelationModel,
) -> Result<f64> {
    let zero = c(0.0, 0.0);
    let mut worst: f64 = 0.0;
    for &(z, w) in points {
        let lhs = boundary_f(psi, phi, z, w, m)?;
        let rhs = boundary_f(psi, phi, zero, z + w, m)?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// `max |F(t+i/2, s) - G(t,s)|` over real `(t, s)`.
pub fn check_boundary_identity(
    psi: &AnalyticVector,
    phi: &AnalyticVector,
    points: &[(f64, f64)],
    m: &RelationModel,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &(t, s) in points {
        let f = boundary_f(psi, phi, c(t, 0.5), c(s, 0.0), m)?;
        let g = eval_boundary_functions(psi, phi, c(t, 0.0), c(s, 0.0), m)?.g.unwrap();
        worst = worst.max((f - g).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "AB_implies_C")]
    AbImpliesC,
    #[serde(rename = "AC_implies_B")]
    AcImpliesB,
    #[serde(rename = "BC_implies_A")]
    BcImpliesA,
}

/// Which triple of conditions: `(a), (b), (c)` or the conjugation variants `(a′), (b), (c′)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionSet {
    Plain,
    WithConjugation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Premise {
    A,
    B,
    C,
}

impl Scenario {
    pub fn premises(&self) -> [Premise; 2] {
        match self {
            Scenario::AbImpliesC => [Premise::A, Premise::B],
            Scenario::AcImpliesB => [Premise::A, Premise::C],
            Scenario::BcImpliesA => [Premise::B, Premise::C],
        }
    }

    pub fn conclusion(&self) -> Premise {
        match self {
            Scenario::AbImpliesC => Premise::C,
            Scenario::AcImpliesB => Premise::B,
            Scenario::BcImpliesA => Premise::A,
        }
    }
}

/// A counter-model. `violates = None` marks an observational control: no single premise is
/// designated and the expected signature is a failing conclusion together with at least one
/// failing premise.
#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    pub model: RelationModel,
    pub violates: Option<Premise>,
    /// Replaces the experiment's parameters for this control, e.g. when its generator needs
    /// probes elsewhere in ν to stay resolved.
    pub params: Option<ExperimentParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentParams {
    pub ts: Vec<f64>,
    pub as_: Vec<f64>,
    pub probes: Vec<AnalyticVector>,
    /// Probes for the half-sided conditions; they need room for `Δ^{1/2}`.
    pub half_sided_probes: Vec<AnalyticVector>,
    pub half_sided_as: Vec<f64>,
    /// Window for the half-sided conditions. Roundoff in `U(a)ψ` is amplified by
    /// `e^{πκ}` there, so they usually want a shorter window than the rest.
    pub half_sided_grid: Option<GridSpec>,
    pub tol: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlOutcome {
    pub label: String,
    pub violates: Option<Premise>,
    pub reports: Vec<ConditionReport>,
    pub conclusion_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: Scenario,
    pub set: ConditionSet,
    pub positive_label: String,
    pub positive: Vec<ConditionReport>,
    pub positive_pass: bool,
    pub controls: Vec<ControlOutcome>,
    pub margin: f64,
}

fn premise_reports(m: &RelationModel, set: ConditionSet, p: Premise, x: &ExperimentParams) -> Result<Vec<ConditionReport>> {
    Ok(match (p, set) {
        (Premise::A, ConditionSet::Plain) => vec![check_condition_a(m, &x.ts, &x.as_, &x.probes, x.tol)?],
        (Premise::A, ConditionSet::WithConjugation) => vec![
            check_condition_a(m, &x.ts, &x.as_, &x.probes, x.tol)?,
            check_condition_a_j(m, &x.as_, &x.probes, x.tol)?,
        ],
        (Premise::B, _) => vec![check_condition_b(m, &x.probes, x.tol)?],
        (Premise::C, set) => {
            let hm = x.half_sided_grid.map_or_else(|| m.clone(), |g| m.on_grid(g));
            match set {
                ConditionSet::Plain => vec![check_condition_c(&hm, &x.half_sided_as, &x.half_sided_probes, x.tol)?],
                ConditionSet::WithConjugation => {
                    vec![check_condition_c_prime(&hm, &x.half_sided_as, &x.half_sided_probes, x.tol)?]
                }
            }
        }
    })
}

fn worst(reports: &[ConditionReport]) -> f64 {
    reports.iter().map(|r| r.residual).fold(0.0, f64::max)
}

/// Runs the positive model through all three conditions and each control through the
/// premises and the conclusion of `scenario`.
///
/// A designated control must violate its premise by at least `margin` and satisfy the other
/// premise within `tol`; otherwise the experiment aborts with `InvalidControl`.
pub fn two_imply_third(
    scenario: Scenario,
    set: ConditionSet,
    positive: &RelationModel,
    controls: &[Control],
    x: &ExperimentParams,
) -> Result<ExperimentReport> {
    let mut pos = Vec::new();
    for p in [Premise::A, Premise::B, Premise::C] {
        pos.extend(premise_reports(positive, set, p, x)?);
    }
    let positive_pass = pos.iter().all(|r| r.pass);
    let mut outcomes = Vec::new();
    for ctl in controls {
        let label = ctl.model.label.clone();
        let x = ctl.params.as_ref().unwrap_or(x);
        let [p1, p2] = scenario.premises();
        if let Some(v) = ctl.violates {
            if v == scenario.conclusion() {
                return Err(Error::InvalidControl { control: label, reason: format!("{v:?} is the conclusion, not a premise") });
            }
        }
        let r1 = premise_reports(&ctl.model, set, p1, x)?;
        let r2 = premise_reports(&ctl.model, set, p2, x)?;
        let rc = premise_reports(&ctl.model, set, scenario.conclusion(), x)?;
        let conclusion_residual = worst(&rc);
        let pass = match ctl.violates {
            Some(v) => {
                let (bad, good) = if v == p1 { (&r1, &r2) } else { (&r2, &r1) };
                if worst(bad) < x.margin {
                    return Err(Error::InvalidControl {
                        control: label,
                        reason: format!("designated premise {v:?} residual {:.3e} below margin {:.3e}", worst(bad), x.margin),
                    });
                }
                if worst(good) > x.tol {
                    return Err(Error::InvalidControl {
                        control: label,
                        reason: format!("the other premise also fails (residual {:.3e} > tol {:.3e})", worst(good), x.tol),
                    });
                }
                conclusion_residual >= x.margin
            }
            None => conclusion_residual >= x.margin && worst(&r1).max(worst(&r2)) >= x.margin,
        };
        let mut reports = r1;
        reports.extend(r2);
        reports.extend(rc);
        outcomes.push(ControlOutcome { label, violates: ctl.violates, reports, conclusion_residual, pass });
    }
    Ok(ExperimentReport {
        scenario,
        set,
        positive_label: positive.label.clone(),
        positive: pos,
        positive_pass,
        controls: outcomes,
        margin: x.margin,
    })
}

/// `r[k+1] ≤ (1+noise)·r[k]` for consecutive refinements, or both at or below `floor`.
pub fn is_monotone_decreasing(residuals: &[f64], noise: f64, floor: f64) -> bool {
    residuals
        .windows(2)
        .all(|w| w[1] <= (1.0 + noise) * w[0] || (w[0] <= floor && w[1] <= floor))
}
