//! One-particle structures of the massive free field in 1+1 dimensions, in rapidity (ν)
//! and boost-conjugate (κ) coordinates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops_core::{golden_section_min, GridSpec, OperatorExpr, Rep, StateVector, Symbol};
use crate::schrodinger::{unresolved_weight, AnalyticSum, AnalyticVector};
use crate::subspace::{bilinear_residual, tomita_from_span, RealSubspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    R,
    RPrime,
}

impl Side {
    /// `-1` for r (`e^{-πκ}`), `+1` for r'.
    fn exponent_sign(self) -> f64 {
        match self {
            Side::R => -1.0,
            Side::RPrime => 1.0,
        }
    }
}

/// The antilinear map whose fixed points are the side's subspace: `S = J Δ^{1/2}` for r and
/// `S* = J Δ^{-1/2}` for r'.
pub fn tomita_expr(side: Side) -> OperatorExpr {
    OperatorExpr::compose([
        OperatorExpr::ConjFlip,
        OperatorExpr::KappaMult(Symbol::Exp { coeff: Complex64::new(-side.exponent_sign() * PI, 0.0) }),
    ])
}

/// `g + e^{∓πκ}·conj g(-κ)` in closed form.
pub fn wedge_vector(side: Side, seed: &AnalyticVector) -> AnalyticSum {
    let flipped = seed.flip_conj().modulate(Complex64::new(side.exponent_sign() * PI, 0.0));
    AnalyticSum(vec![*seed, flipped])
}

/// Zeroes the sample at `κ = -kappa_max`, which has no mirror partner on the grid.
pub fn restrict(mut v: StateVector) -> Result<StateVector> {
    let mut k = v.to_rep(Rep::Kappa)?;
    k.samples[0] = Complex64::new(0.0, 0.0);
    v = k;
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct WedgeBasis {
    pub side: Side,
    pub seeds: Vec<AnalyticVector>,
    pub vectors: Vec<StateVector>,
    /// Worst `||S f - f|| / ||f||` over the basis.
    pub fixed_point_residual: f64,
}

impl WedgeBasis {
    pub fn subspace(&self, grid: GridSpec) -> Result<RealSubspace> {
        RealSubspace::with_ambient(grid, self.vectors.clone(), grid.n_points - 1, crate::subspace::DEFAULT_RANK_TOL)
    }
}

pub fn build_wedge_basis(side: Side, seeds: &[AnalyticVector], grid: GridSpec) -> Result<WedgeBasis> {
    let s = tomita_expr(side);
    let mut vectors = Vec::with_capacity(seeds.len());
    let mut worst: f64 = 0.0;
    for seed in seeds {
        // domain condition: the damped-side weight of the seed must be realizable and decayed
        AnalyticSum(vec![seed.modulate(Complex64::new(-side.exponent_sign() * PI, 0.0))]).realize(grid)?;
        let f = restrict(wedge_vector(side, seed).realize(grid)?)?;
        let sf = s.apply(&f).map_err(|e| match e {
            Error::NonFinite(m) => Error::Domain(m),
            e => e,
        })?;
        worst = worst.max(sf.rel_diff(&f)?);
        vectors.push(f);
    }
    Ok(WedgeBasis { side, seeds: seeds.to_vec(), vectors, fixed_point_residual: worst })
}

/// `h_{λ,ρ} = λe^ν + ρe^{-ν}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LRGenerator {
    pub lambda: f64,
    pub rho: f64,
}

impl LRGenerator {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        if lambda == 0.0 && rho == 0.0 {
            return Err(Error::Domain("(lambda, rho) = (0, 0) is excluded".into()));
        }
        Ok(Self { lambda, rho })
    }

    pub fn symbol(&self, nu: f64) -> f64 {
        self.lambda * nu.exp() + self.rho * (-nu).exp()
    }

    pub fn group(&self, a: f64) -> OperatorExpr {
        OperatorExpr::NuMult(Symbol::LrPhase { a: Complex64::new(a, 0.0), lambda: self.lambda, rho: self.rho })
    }

    /// `Δ^{it} h Δ^{-it}`: `(e^{-2πt}λ, e^{2πt}ρ)`.
    pub fn boosted(&self, t: f64) -> Self {
        Self { lambda: (-2.0 * PI * t).exp() * self.lambda, rho: (2.0 * PI * t).exp() * self.rho }
    }

    /// `J h J` at group level: `(-λ, -ρ)`.
    pub fn reflected(&self) -> Self {
        Self { lambda: -self.lambda, rho: -self.rho }
    }

    /// Minimum of the symbol over the grid's ν points, refined by golden-section search
    /// around the best grid point.
    pub fn symbol_min(&self, grid: GridSpec) -> f64 {
        let nus = grid.nus();
        let (k, _) = nus
            .iter()
            .enumerate()
            .map(|(k, &nu)| (k, self.symbol(nu)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        let lo = nus[k.saturating_sub(1)];
        let hi = nus[(k + 1).min(nus.len() - 1)];
        let refined = golden_section_min(|x| self.symbol(x), lo, hi);
        refined.min(self.symbol(nus[k]))
    }
}

pub fn check_lr_resolved(gen: &LRGenerator, a: f64, v: &StateVector, tol: f64) -> Result<()> {
    let w = unresolved_weight(v, a, gen.lambda, gen.rho)?;
    if w > tol {
        return Err(Error::Resolution {
            what: format!("e^(ia h) with a={a}, (lambda,rho)=({},{})", gen.lambda, gen.rho),
            weight: w,
            tol,
        });
    }
    Ok(())
}

/// `e^{ia h_{λ,ρ}} v` after the resolution check.
pub fn lr_apply(gen: &LRGenerator, a: f64, v: &StateVector, alias_tol: f64) -> Result<StateVector> {
    check_lr_resolved(gen, a, v, alias_tol)?;
    gen.group(a).apply(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub positive: bool,
    pub endo_m: bool,
    pub endo_mprime: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationDetail {
    pub class: Classification,
    pub symbol_min: f64,
    pub endo_m_residual: f64,
    pub endo_mprime_residual: f64,
}

/// Worst bilinear residual of `e^{ia h} f` against `against`, over `a` and `f ∈ from`.
pub fn transported_residual(
    gen: &LRGenerator,
    from: &[StateVector],
    against: &RealSubspace,
    a_samples: &[f64],
    alias_tol: f64,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &a in a_samples {
        for f in from {
            let moved = lr_apply(gen, a, f, alias_tol)?;
            worst = worst.max(bilinear_residual(&moved, against)?);
        }
    }
    Ok(worst)
}

/// `positive`: symbol minimum `≥ -tol`. `endo_m`: `e^{iah}r ⊂ r` for the sampled `a ≥ 0`,
/// tested bilinearly against r'. `endo_mprime`: the same with the roles of r and r' exchanged.
pub fn classify(
    gen: &LRGenerator,
    r_basis: &WedgeBasis,
    rprime_basis: &WedgeBasis,
    a_samples: &[f64],
    grid: GridSpec,
    tol: f64,
    alias_tol: f64,
) -> Result<ClassificationDetail> {
    if a_samples.iter().any(|&a| a < 0.0) {
        return Err(Error::Domain("classification samples must satisfy a >= 0".into()));
    }
    let r_sub = r_basis.subspace(grid)?;
    let rp_sub = rprime_basis.subspace(grid)?;
    let symbol_min = gen.symbol_min(grid);
    let endo_m_residual = transported_residual(gen, &r_basis.vectors, &rp_sub, a_samples, alias_tol)?;
    let endo_mprime_residual = transported_residual(gen, &rprime_basis.vectors, &r_sub, a_samples, alias_tol)?;
    Ok(ClassificationDetail {
        class: Classification {
            positive: symbol_min >= -tol,
            endo_m: endo_m_residual <= tol,
            endo_mprime: endo_mprime_residual <= tol,
        },
        symbol_min,
        endo_m_residual,
        endo_mprime_residual,
    })
}

/// Reference truth table: (i) positive iff λ,ρ ≥ 0; (iii) endomorphism of M iff λ ≥ 0 ≥ ρ;
/// (iv) endomorphism of M' iff ρ ≥ 0 ≥ λ.
pub fn expected_classification(gen: &LRGenerator) -> Classification {
    Classification {
        positive: gen.lambda >= 0.0 && gen.rho >= 0.0,
        endo_m: gen.lambda >= 0.0 && gen.rho <= 0.0,
        endo_mprime: gen.lambda <= 0.0 && gen.rho >= 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceResidual {
    pub boost: f64,
    pub reflection: f64,
}

/// `Δ^{it} e^{iah} Δ^{-it} = e^{iah'}` with `h'` the boosted pair, and
/// `J e^{iah} J = e^{ia h_{-λ,-ρ}}`, worst relative residual over probes and `a`.
pub fn check_modular_covariance_ii(
    gen: &LRGenerator,
    t: f64,
    a_samples: &[f64],
    probes: &[StateVector],
    alias_tol: f64,
) -> Result<CovarianceResidual> {
    let dp = |t: f64| OperatorExpr::KappaMult(Symbol::Exp { coeff: Complex64::new(0.0, 2.0 * PI * t) });
    let boosted = gen.boosted(t);
    let reflected = gen.reflected();
    let mut out = CovarianceResidual { boost: 0.0, reflection: 0.0 };
    for &a in a_samples {
        let lhs = OperatorExpr::compose([dp(t), gen.group(a), dp(-t)]);
        let jaj = OperatorExpr::compose([OperatorExpr::ConjFlip, gen.group(a), OperatorExpr::ConjFlip]);
        for v in probes {
            let shifted = dp(-t).apply(v)?;
            check_lr_resolved(gen, a, &shifted, alias_tol)?;
            check_lr_resolved(&boosted, a, v, alias_tol)?;
            check_lr_resolved(&reflected, a, v, alias_tol)?;
            let n = v.norm();
            out.boost = out.boost.max(lhs.apply(v)?.sub(&boosted.group(a).apply(v)?)?.norm() / n);
            out.reflection = out.reflection.max(jaj.apply(v)?.sub(&reflected.group(a).apply(v)?)?.norm() / n);
        }
    }
    Ok(out)
}

/// Smooth bump `amplitude·exp(-1/(1-y²))` on `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub start: f64,
    pub end: f64,
    pub amplitude: f64,
}

impl BumpProfile {
    pub fn new(start: f64, end: f64, amplitude: f64) -> Result<Self> {
        if !(end > start) {
            return Err(Error::Domain(format!("empty bump support [{start}, {end}]")));
        }
        Ok(Self { start, end, amplitude })
    }

    pub fn value(&self, p: f64) -> f64 {
        let y = (2.0 * p - self.start - self.end) / (self.end - self.start);
        if y.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (-1.0 / (1.0 - y * y)).exp()
        }
    }

    /// `(2π)^{-1/2} ∫ g(x) e^{iqx} dx` by the trapezoid rule, which is spectrally accurate
    /// for this profile; returns zero beyond the rule's resolved band.
    ///
    /// The sign of the exponent fixes which of r, r' the data supported in `[1, ∞)` lands in,
    /// given `δ^{it} = e^{2πiκ}` and `u(a) = e^{iae^ν}`; with `e^{+iqx}` it lands in r.
    pub fn transform(&self, q: f64, nodes: usize) -> Complex64 {
        let len = self.end - self.start;
        let dx = len / nodes as f64;
        if q.abs() * dx > PI / 4.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..nodes {
            let x = self.start + i as f64 * dx;
            acc += Complex64::from_polar(self.value(x), q * x);
        }
        acc * (dx / (2.0 * PI).sqrt())
    }
}

/// Vector built from time-zero data `g` (field) and `h` (momentum) supported in `[1, ∞)`.
#[derive(Debug, Clone)]
pub struct R1Vector {
    pub g_profile: Option<BumpProfile>,
    pub h_profile: Option<BumpProfile>,
    pub realized: StateVector,
}

pub const R1_QUADRATURE_NODES: usize = 2048;

/// Realizes `ĝ(sinh ν) + i·cosh ν·ĥ(sinh ν)` in ν (mass 1).
pub fn build_r1_vector(g: Option<BumpProfile>, h: Option<BumpProfile>, grid: GridSpec) -> Result<R1Vector> {
    for p in [g, h].into_iter().flatten() {
        if p.start < 1.0 {
            return Err(Error::Support(format!("profile support [{}, {}] leaves [1, inf)", p.start, p.end)));
        }
    }
    Ok(R1Vector { g_profile: g, h_profile: h, realized: realize_time_zero_data(g, h, grid)? })
}

/// The same construction without the support precondition, for controls.
pub fn realize_time_zero_data(g: Option<BumpProfile>, h: Option<BumpProfile>, grid: GridSpec) -> Result<StateVector> {
    let v = StateVector::from_nu_fn(grid, |nu| {
        let q = nu.sinh();
        let mut z = Complex64::new(0.0, 0.0);
        if let Some(g) = g {
            z += g.transform(q, R1_QUADRATURE_NODES);
        }
        if let Some(h) = h {
            z += Complex64::i() * nu.cosh() * h.transform(q, R1_QUADRATURE_NODES);
        }
        z
    });
    if !v.is_finite() {
        return Err(Error::NonFinite("time-zero data".into()));
    }
    restrict(v.to_kappa()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonScan {
    pub a_values: Vec<f64>,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

pub const EPSILON_SCAN_STEPS: usize = 32;

/// Log-spaced `a` in `(0, eps]` spanning three decades; `eps = 0` scans `v` itself.
pub fn epsilon_invariance_scan(
    v: &StateVector,
    gen: &LRGenerator,
    eps: f64,
    steps: usize,
    rprime: &RealSubspace,
    alias_tol: f64,
) -> Result<EpsilonScan> {
    if eps < 0.0 {
        return Err(Error::Domain("eps must be non-negative".into()));
    }
    let a_values: Vec<f64> = if eps == 0.0 || steps == 0 {
        vec![0.0]
    } else if steps == 1 {
        vec![eps]
    } else {
        (0..steps).map(|k| eps * 10f64.powf(-3.0 * (1.0 - k as f64 / (steps - 1) as f64))).collect()
    };
    let mut residuals = Vec::with_capacity(a_values.len());
    for &a in &a_values {
        let moved = if a == 0.0 { v.clone() } else { lr_apply(gen, a, v, alias_tol)? };
        residuals.push(bilinear_residual(&moved, rprime)?);
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(EpsilonScan { a_values, residuals, max_residual })
}

/// Seeds whose two wedge-vector terms have comparable size: center `∓πw²/2` for r / r'.
pub fn balanced_seeds(side: Side, widths: &[f64], count_per_width: usize) -> Vec<AnalyticVector> {
    let s = match side {
        Side::R => -1.0,
        Side::RPrime => 1.0,
    };
    let mut out = Vec::new();
    for &w in widths {
        for k in 0..count_per_width {
            let c = s * PI * w * w / 2.0 + 0.5 * w * (k as f64 - (count_per_width as f64 - 1.0) / 2.0);
            let ph = Complex64::from_polar(1.0, 0.61 * k as f64 + 0.29 * w);
            out.push(AnalyticVector::new(c, w, 0, ph));
        }
    }
    out
}

/// Seeds for the window oracle: one Gaussian every 8 grid steps on `[-(K-0.3), 0]`, width one
/// seed spacing, with phases 1 and i.
pub fn window_seeds(grid: GridSpec) -> Vec<StateVector> {
    let d = 8.0 * grid.step();
    let reach = grid.kappa_max - 0.3;
    let mut out = Vec::new();
    let mut k = 0usize;
    while k as f64 * d <= reach {
        let c = -(k as f64) * d;
        for ph in [Complex64::new(1.0, 0.0), Complex64::i()] {
            let mut g = StateVector::from_kappa_fn(grid, |x| ph * (-(x - c).powi(2) / (2.0 * d * d)).exp());
            g.samples[0] = Complex64::new(0.0, 0.0);
            out.push(g);
        }
        k += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomitaOracleReport {
    pub n_points: usize,
    pub kappa_max: f64,
    pub span_dim: usize,
    /// `max ‖Δ_W^{it} P_W p - e^{2πitκ} p‖ / ‖p‖` over probes and `t`.
    pub residual: f64,
    /// `‖S - JΔ^{1/2}‖ / ‖S‖` of the reconstruction.
    pub reconstruction_residual: f64,
}

/// Reconstructs the modular data of the wedge subspace spanned by [`window_seeds`] and compares
/// its modular flow with `e^{2πitκ}` on Gaussian probes `(center, width)`. The flow is bounded,
/// so the comparison is not swamped by `e^{2πκ}` acting on projection tails.
pub fn tomita_oracle(grid: GridSpec, ts: &[f64], probes: &[(f64, f64)]) -> Result<TomitaOracleReport> {
    let s = tomita_expr(Side::R);
    let vectors = window_seeds(grid)
        .into_iter()
        .map(|g| restrict(g.add(&s.apply(&g)?)?))
        .collect::<Result<Vec<_>>>()?;
    let r = RealSubspace::with_ambient(grid, vectors, grid.n_points - 1, crate::subspace::DEFAULT_RANK_TOL)?;
    let md = tomita_from_span(&r)?;
    let mut worst: f64 = 0.0;
    for &(c0, w) in probes {
        let mut p = StateVector::from_kappa_fn(grid, |x| Complex64::new((-(x - c0).powi(2) / (2.0 * w * w)).exp(), 0.0));
        p.samples[0] = Complex64::new(0.0, 0.0);
        for &t in ts {
            let lhs = md.apply_delta_pow(Complex64::new(0.0, t), &p)?;
            let rhs = OperatorExpr::KappaMult(Symbol::Exp { coeff: Complex64::new(0.0, 2.0 * PI * t) }).apply(&p)?;
            worst = worst.max(lhs.sub(&rhs)?.norm() / p.norm());
        }
    }
    Ok(TomitaOracleReport {
        n_points: grid.n_points,
        kappa_max: grid.kappa_max,
        span_dim: md.dim(),
        residual: worst,
        reconstruction_residual: md.reconstruction_residual(),
    })
}

pub const ORACLE_TIMES: [f64; 3] = [0.1, 0.25, -0.5];

pub fn oracle_probes() -> Vec<(f64, f64)> {
    [-1.0, 0.0, 1.0].iter().flat_map(|&c| [(c, 0.4), (c, 0.6)]).collect()
}
