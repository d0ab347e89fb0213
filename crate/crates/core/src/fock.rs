//! Truncated symmetric Fock space over a few one-particle modes: exponential vectors, Weyl
//! operators, multiplicative and additive second quantization, number operator.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops_core::{GridSpec, OperatorExpr, StateVector};
use crate::schrodinger::AnalyticVector;

pub const MAX_MODES: usize = 8;
pub const MAX_PARTICLES: usize = 8;
pub const DEFAULT_MAX_DIM: usize = 20_000;
pub const DEFAULT_TAIL_BUDGET: f64 = 1e-2;
pub const DEFAULT_LEAKAGE_BOUND: f64 = 1e-6;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Occupation-number basis with total particle number `≤ n_max`, ordered by total then
/// lexicographically (descending in the first mode).
#[derive(Debug, Clone)]
pub struct FockTruncation {
    pub modes: Vec<StateVector>,
    pub n_modes: usize,
    pub n_max: usize,
    pub index: Vec<Vec<u32>>,
    lookup: HashMap<Vec<u32>, usize>,
    pub tail_budget: f64,
    pub leakage_bound: f64,
}

fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in (0..=total).rev() {
        prefix.push(k);
        compositions(total - k, parts - 1, prefix, out);
        prefix.pop();
    }
}

impl FockTruncation {
    /// Abstract modes `e_1..e_m` with no grid realization.
    pub fn abstract_modes(n_modes: usize, n_max: usize) -> Result<Self> {
        Self::build(Vec::new(), n_modes, n_max, DEFAULT_MAX_DIM)
    }

    /// Modes given as grid vectors; their Gram matrix must be the identity to 1e-10.
    pub fn new(modes: Vec<StateVector>, n_max: usize, max_dim: usize) -> Result<Self> {
        let m = modes.len();
        for i in 0..m {
            for j in 0..m {
                let g = modes[i].inner(&modes[j])?;
                let want = if i == j { 1.0 } else { 0.0 };
                if (g - want).norm() > 1e-10 {
                    return Err(Error::ModelInconsistency(format!("mode Gram entry ({i},{j}) = {g}")));
                }
            }
        }
        Self::build(modes, m, n_max, max_dim)
    }

    fn build(modes: Vec<StateVector>, n_modes: usize, n_max: usize, max_dim: usize) -> Result<Self> {
        if n_modes == 0 || n_modes > MAX_MODES || n_max > MAX_PARTICLES {
            return Err(Error::Truncation(format!(
                "need 1 ≤ modes ≤ {MAX_MODES} and n_max ≤ {MAX_PARTICLES}, got {n_modes} and {n_max}"
            )));
        }
        let dim = binomial(n_modes + n_max, n_modes);
        if dim > max_dim {
            return Err(Error::Truncation(format!("Fock dimension {dim} exceeds {max_dim}")));
        }
        let mut index = Vec::with_capacity(dim);
        for total in 0..=n_max as u32 {
            compositions(total, n_modes, &mut Vec::new(), &mut index);
        }
        let lookup = index.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        Ok(Self {
            modes,
            n_modes,
            n_max,
            index,
            lookup,
            tail_budget: DEFAULT_TAIL_BUDGET,
            leakage_bound: DEFAULT_LEAKAGE_BOUND,
        })
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn position(&self, occ: &[u32]) -> Option<usize> {
        self.lookup.get(occ).copied()
    }

    pub fn particle_number(&self, i: usize) -> u32 {
        self.index[i].iter().sum()
    }

    /// Basis positions of the `n`-particle sector.
    pub fn sector(&self, n: u32) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.particle_number(i) == n).collect()
    }

    pub fn vacuum(&self) -> FockVector {
        let mut c = DVector::zeros(self.dim());
        c[0] = Complex64::new(1.0, 0.0);
        FockVector { coeffs: c, tail_bound: 0.0 }
    }

    /// Mode coefficients `<e_i|v>` and the norm of the part of `v` outside the mode span.
    pub fn project(&self, v: &StateVector) -> Result<(DVector<Complex64>, f64)> {
        if self.modes.is_empty() {
            return Err(Error::ModelInconsistency("truncation has no grid modes".into()));
        }
        let c = DVector::from_iterator(self.n_modes, self.modes.iter().map(|e| e.inner(v)).collect::<Result<Vec<_>>>()?);
        let mut rest = v.clone();
        for (e, ci) in self.modes.iter().zip(c.iter()) {
            rest = rest.sub(&e.scale(*ci))?;
        }
        Ok((c, rest.norm()))
    }
}

/// Leading Gaussian-Hermite functions orthonormalized on the grid.
pub fn gaussian_hermite_modes(grid: GridSpec, count: usize, center: f64, width: f64) -> Result<Vec<StateVector>> {
    let mut out: Vec<StateVector> = Vec::with_capacity(count);
    for d in 0..count as u32 {
        let mut v = AnalyticVector::new(center, width, d, Complex64::new(1.0, 0.0)).realize(grid)?;
        for _ in 0..2 {
            for e in &out {
                v = v.sub(&e.scale(e.inner(&v)?))?;
            }
        }
        let n = v.norm();
        if n < 1e-8 {
            return Err(Error::Singular(format!("mode {d} is dependent on the previous ones")));
        }
        out.push(v.scale(Complex64::new(1.0 / n, 0.0)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub coeffs: DVector<Complex64>,
    /// Norm bound on what the truncation discarded.
    pub tail_bound: f64,
}

impl FockVector {
    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn inner(&self, other: &FockVector) -> Complex64 {
        self.coeffs.dotc(&other.coeffs)
    }
}

/// `‖f‖^{N+1}/√((N+1)!)·e^{‖f‖²/2}`: bounds the norm of the sectors above `N` of `exp(f)`.
pub fn exp_tail_bound(norm_f: f64, n_max: usize) -> f64 {
    let k = n_max as i32 + 1;
    norm_f.powi(k) / factorial(k as u32).sqrt() * (0.5 * norm_f * norm_f).exp()
}

/// `y^{N+1}/(N+1)!·e^y` with `y = ‖f‖‖g‖`: bounds the error of the truncated
/// `<exp f|exp g>` against `e^{<f|g>}`.
pub fn inner_tail_bound(norm_f: f64, norm_g: f64, n_max: usize) -> f64 {
    let y = norm_f * norm_g;
    let k = n_max as i32 + 1;
    y.powi(k) / factorial(k as u32) * y.exp()
}

/// Floating-point error of the truncated `<exp f|exp g>` sum: every term is bounded by
/// `Π|f_j|^{α_j}|g_j|^{α_j}/α_j!`, whose total is at most `e^y`.
pub fn inner_roundoff_bound(norm_f: f64, norm_g: f64, tr: &FockTruncation) -> f64 {
    (tr.dim() + 4 * tr.n_max + 1) as f64 * f64::EPSILON * (norm_f * norm_g).exp()
}

/// Truncated `exp(f) = Σ f^{⊗n}/√(n!)`: the coefficient of occupation `α` is `Π f_j^{α_j}/√(α_j!)`.
pub fn exp_vector(f: &DVector<Complex64>, tr: &FockTruncation) -> Result<FockVector> {
    check_modes(f, tr)?;
    let tail = exp_tail_bound(f.norm(), tr.n_max);
    if tail > tr.tail_budget {
        return Err(Error::Truncation(format!("‖f‖ = {:.3} leaves tail {tail:.3e} above {:.1e}", f.norm(), tr.tail_budget)));
    }
    let coeffs = DVector::from_iterator(
        tr.dim(),
        tr.index.iter().map(|occ| {
            occ.iter()
                .zip(f.iter())
                .map(|(&k, fj)| fj.powu(k) / factorial(k).sqrt())
                .product::<Complex64>()
        }),
    );
    Ok(FockVector { coeffs, tail_bound: tail })
}

fn check_modes(f: &DVector<Complex64>, tr: &FockTruncation) -> Result<()> {
    if f.len() != tr.n_modes {
        return Err(Error::GridMismatch(format!("{} mode coefficients for {} modes", f.len(), tr.n_modes)));
    }
    Ok(())
}

/// Creation operator `a†_j`, dropping what leaves the truncation.
pub fn creation(j: usize, tr: &FockTruncation) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(tr.dim(), tr.dim());
    for (col, occ) in tr.index.iter().enumerate() {
        let mut up = occ.clone();
        up[j] += 1;
        if let Some(row) = tr.position(&up) {
            a[(row, col)] = Complex64::new((up[j] as f64).sqrt(), 0.0);
        }
    }
    a
}

/// `a†(f) = Σ f_j a†_j`.
pub fn creation_of(f: &DVector<Complex64>, tr: &FockTruncation) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(tr.dim(), tr.dim());
    for (j, fj) in f.iter().enumerate() {
        if *fj != zero() {
            out += creation(j, tr) * *fj;
        }
    }
    out
}

/// `a†(f) - a(f)`; `w(f)` is its exponential.
pub fn field_generator(f: &DVector<Complex64>, tr: &FockTruncation) -> Result<DMatrix<Complex64>> {
    check_modes(f, tr)?;
    let ad = creation_of(f, tr);
    Ok(&ad - ad.adjoint())
}

/// `φ(f) = i(a(f) - a†(f))`, so that `w(f) = e^{iφ(f)}`.
pub fn field(f: &DVector<Complex64>, tr: &FockTruncation) -> Result<DMatrix<Complex64>> {
    Ok(field_generator(f, tr)? * Complex64::new(0.0, -1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantKind {
    MultSecondQuant,
    Weyl,
    Number,
    Additive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedOp {
    pub kind: QuantKind,
    pub matrix: DMatrix<Complex64>,
    /// One-particle leakage out of the mode span (0 when built from a mode matrix).
    pub leakage: f64,
}

impl QuantizedOp {
    pub fn apply(&self, v: &FockVector) -> FockVector {
        FockVector { coeffs: &self.matrix * &v.coeffs, tail_bound: v.tail_bound }
    }
}

/// `w(f)` as the matrix exponential of the truncated field generator.
pub fn weyl(f: &DVector<Complex64>, tr: &FockTruncation) -> Result<QuantizedOp> {
    let tail = exp_tail_bound(f.norm(), tr.n_max);
    if tail > tr.tail_budget {
        return Err(Error::Truncation(format!("‖f‖ = {:.3} too large for n_max = {}", f.norm(), tr.n_max)));
    }
    Ok(QuantizedOp { kind: QuantKind::Weyl, matrix: field_generator(f, tr)?.exp(), leakage: 0.0 })
}

pub fn weyl_apply(f: &DVector<Complex64>, v: &FockVector, tr: &FockTruncation) -> Result<FockVector> {
    let tail = exp_tail_bound(f.norm(), tr.n_max);
    if tail > tr.tail_budget {
        return Err(Error::Truncation(format!("‖f‖ = {:.3} too large for n_max = {}", f.norm(), tr.n_max)));
    }
    // Taylor series of the exponential acting on `v`; cheaper than a dense matrix exponential.
    let gen = field_generator(f, tr)?;
    let mut term = v.coeffs.clone();
    let mut sum = term.clone();
    for k in 1..200 {
        term = &gen * term * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
    }
    Ok(FockVector { coeffs: sum, tail_bound: v.tail_bound + tail })
}

/// Sparse polynomial in mode variables; `x^α` stands for `√(α!)|α>`.
type Poly = HashMap<Vec<u32>, Complex64>;

/// `Γ(u)` from a unitary on the mode span: `Γ(u)|β> = Π_j (Σ_i u_ij a†_i)^{β_j}/√(β!) Ω`.
pub fn second_quantize_matrix(u: &DMatrix<Complex64>, tr: &FockTruncation) -> Result<QuantizedOp> {
    let m = tr.n_modes;
    if u.nrows() != m || u.ncols() != m {
        return Err(Error::GridMismatch(format!("{}x{} one-particle matrix for {m} modes", u.nrows(), u.ncols())));
    }
    let mut out = DMatrix::zeros(tr.dim(), tr.dim());
    for (col, beta) in tr.index.iter().enumerate() {
        let mut poly: Poly = HashMap::from([(vec![0u32; m], Complex64::new(1.0, 0.0))]);
        for (j, &bj) in beta.iter().enumerate() {
            for _ in 0..bj {
                let mut next: Poly = HashMap::new();
                for (mono, c) in &poly {
                    for i in 0..m {
                        if u[(i, j)] == zero() {
                            continue;
                        }
                        let mut k = mono.clone();
                        k[i] += 1;
                        *next.entry(k).or_insert(zero()) += c * u[(i, j)];
                    }
                }
                poly = next;
            }
        }
        let norm_beta: f64 = beta.iter().map(|&b| factorial(b)).product::<f64>().sqrt();
        for (alpha, c) in poly {
            let row = tr.position(&alpha).expect("particle number is preserved");
            let norm_alpha: f64 = alpha.iter().map(|&a| factorial(a)).product::<f64>().sqrt();
            out[(row, col)] = c * norm_alpha / norm_beta;
        }
    }
    Ok(QuantizedOp { kind: QuantKind::MultSecondQuant, matrix: out, leakage: 0.0 })
}

/// Matrix of a one-particle operator in the mode basis, with its leakage
/// `max_j ‖(1-P)u e_j‖`.
pub fn compress(u: &OperatorExpr, tr: &FockTruncation) -> Result<(DMatrix<Complex64>, f64)> {
    let m = tr.n_modes;
    let mut mat = DMatrix::zeros(m, m);
    let mut leak: f64 = 0.0;
    for (j, e) in tr.modes.iter().enumerate() {
        let (c, rest) = tr.project(&u.apply(e)?)?;
        mat.set_column(j, &c);
        leak = leak.max(rest);
    }
    if tr.modes.is_empty() {
        return Err(Error::ModelInconsistency("truncation has no grid modes".into()));
    }
    Ok((mat, leak))
}

/// `Γ(u)` for a one-particle operator on the grid. Fails when `u` leaks out of the mode
/// span by more than the truncation's bound.
pub fn second_quantize_mult(u: &OperatorExpr, tr: &FockTruncation) -> Result<QuantizedOp> {
    let (mat, leak) = compress(u, tr)?;
    if leak > tr.leakage_bound {
        return Err(Error::Leakage { leakage: leak, bound: tr.leakage_bound });
    }
    let mut op = second_quantize_matrix(&mat, tr)?;
    op.leakage = leak;
    Ok(op)
}

/// `dΓ(h) = Σ h_jk a†_j a_k`.
pub fn second_quantize_additive(h: &DMatrix<Complex64>, tr: &FockTruncation) -> Result<QuantizedOp> {
    let m = tr.n_modes;
    if h.nrows() != m || h.ncols() != m {
        return Err(Error::GridMismatch(format!("{}x{} one-particle matrix for {m} modes", h.nrows(), h.ncols())));
    }
    let mut out = DMatrix::zeros(tr.dim(), tr.dim());
    for (col, occ) in tr.index.iter().enumerate() {
        for k in 0..m {
            if occ[k] == 0 {
                continue;
            }
            for j in 0..m {
                if h[(j, k)] == zero() {
                    continue;
                }
                let mut to = occ.clone();
                to[k] -= 1;
                to[j] += 1;
                let amp = (occ[k] as f64 * to[j] as f64).sqrt();
                let row = tr.position(&to).expect("particle number is preserved");
                out[(row, col)] += h[(j, k)] * amp;
            }
        }
    }
    Ok(QuantizedOp { kind: QuantKind::Additive, matrix: out, leakage: 0.0 })
}

pub fn number_operator(tr: &FockTruncation) -> QuantizedOp {
    let d = DVector::from_iterator(tr.dim(), (0..tr.dim()).map(|i| Complex64::new(tr.particle_number(i) as f64, 0.0)));
    QuantizedOp { kind: QuantKind::Number, matrix: DMatrix::from_diagonal(&d), leakage: 0.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumberReport {
    pub diagonal_matches_occupation: bool,
    /// `max |dΓ(1) - N|`.
    pub additive_identity_defect: f64,
}

pub fn number_check(tr: &FockTruncation) -> Result<NumberReport> {
    let n = number_operator(tr);
    let diag = (0..tr.dim()).all(|i| {
        (0..tr.dim()).all(|j| {
            let want = if i == j { tr.particle_number(i) as f64 } else { 0.0 };
            n.matrix[(i, j)] == Complex64::new(want, 0.0)
        })
    });
    let id = second_quantize_additive(&DMatrix::identity(tr.n_modes, tr.n_modes), tr)?;
    let defect = (&id.matrix - &n.matrix).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(NumberReport { diagonal_matches_occupation: diag, additive_identity_defect: defect })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacuumReport {
    pub vacuum_fixed: bool,
    pub invariant_dim: usize,
    /// `max ‖M Ω - Ω‖` over the family.
    pub vacuum_defect: f64,
    /// `<Ω|M Ω>` for each member.
    pub vacuum_expectations: Vec<Complex64>,
}

/// Vacuum invariance and the dimension of the joint fixed space of a family.
pub fn vacuum_checks(family: &[QuantizedOp], tr: &FockTruncation) -> Result<VacuumReport> {
    if family.is_empty() {
        return Err(Error::ModelInconsistency("empty operator family".into()));
    }
    let d = tr.dim();
    let omega = tr.vacuum();
    let mut defect: f64 = 0.0;
    let mut expectations = Vec::new();
    let mut stacked = DMatrix::zeros(d * family.len(), d);
    for (k, op) in family.iter().enumerate() {
        let mo = op.apply(&omega);
        defect = defect.max((&mo.coeffs - &omega.coeffs).norm());
        expectations.push(omega.inner(&mo));
        let diff = &op.matrix - DMatrix::<Complex64>::identity(d, d);
        stacked.view_mut((k * d, 0), (d, d)).copy_from(&diff);
    }
    // Joint fixed space = kernel of the stacked defects.
    let gram = stacked.adjoint() * &stacked;
    let eig = gram.symmetric_eigenvalues();
    let scale = eig.iter().copied().fold(0.0, f64::max).max(1.0);
    let invariant_dim = eig.iter().filter(|&&e| e.abs() <= 1e-16 * scale * d as f64 + 1e-20).count();
    Ok(VacuumReport { vacuum_fixed: defect <= 1e-10, invariant_dim, vacuum_defect: defect, vacuum_expectations: expectations })
}

/// Positive one-particle generator compressed to the modes and the family `Γ(e^{iaH})`.
pub fn compressed_family(h: &OperatorExpr, as_: &[f64], tr: &FockTruncation) -> Result<Vec<QuantizedOp>> {
    let (hm, _) = compress(h, tr)?;
    let hm = (&hm + hm.adjoint()) * Complex64::new(0.5, 0.0);
    as_.iter()
        .map(|&a| second_quantize_matrix(&(&hm * Complex64::new(0.0, a)).exp(), tr))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops_core::{Rep, Symbol};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_f(rng: &mut ChaCha8Rng, m: usize, norm: f64) -> DVector<Complex64> {
        let v = DVector::from_iterator(m, (0..m).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
        let n = v.norm();
        v * Complex64::new(norm / n, 0.0)
    }

    fn random_unitary(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(m, m, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = (&a + a.adjoint()) * c(0.5, 0.0);
        (h * c(0.0, 1.0)).exp()
    }

    #[test]
    fn basis_size_and_order() {
        let tr = FockTruncation::abstract_modes(4, 8).unwrap();
        assert_eq!(tr.dim(), 495);
        assert_eq!(tr.index[0], vec![0, 0, 0, 0]);
        assert_eq!(tr.sector(2).len(), 10);
        assert!(FockTruncation::abstract_modes(9, 2).is_err());
        assert!(matches!(FockTruncation::build(Vec::new(), 8, 8, 1000), Err(Error::Truncation(_))));
    }

    #[test]
    fn exp_vector_examples() {
        let tr = FockTruncation::abstract_modes(3, 6).unwrap();
        let v = exp_vector(&DVector::zeros(3), &tr).unwrap();
        assert_eq!(v, tr.vacuum());
        let z = c(0.3, -0.2);
        let f = DVector::from_vec(vec![z, zero(), zero()]);
        let e = exp_vector(&f, &tr).unwrap();
        for n in 0..=6u32 {
            let i = tr.position(&[n, 0, 0]).unwrap();
            assert!((e.coeffs[i] - z.powu(n) / factorial(n).sqrt()).norm() < 1e-15);
        }
        let big = DVector::from_vec(vec![c(3.0, 0.0), zero(), zero()]);
        assert!(matches!(exp_vector(&big, &tr), Err(Error::Truncation(_))));
    }

    #[test]
    fn exp_inner_product_law() {
        let tr = FockTruncation::abstract_modes(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fs: Vec<_> = (0..5).map(|k| random_f(&mut rng, 4, 0.1 * (k + 1) as f64)).collect();
        for f in &fs {
            for g in &fs {
                let lhs = exp_vector(f, &tr).unwrap().inner(&exp_vector(g, &tr).unwrap());
                let rhs = f.dotc(g).exp();
                let bound = inner_tail_bound(f.norm(), g.norm(), tr.n_max) + inner_roundoff_bound(f.norm(), g.norm(), &tr);
                assert!((lhs - rhs).norm() <= bound, "{:.3e} > {bound:.3e}", (lhs - rhs).norm());
            }
        }
    }

    #[test]
    fn weyl_on_vacuum_and_exp_vectors() {
        let tr = FockTruncation::abstract_modes(4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert!((weyl(&DVector::zeros(4), &tr).unwrap().matrix - DMatrix::identity(tr.dim(), tr.dim())).norm() < 1e-14);
        for k in 1..=5 {
            let f = random_f(&mut rng, 4, 0.1 * k as f64);
            let got = weyl_apply(&f, &tr.vacuum(), &tr).unwrap();
            let want = exp_vector(&f, &tr).unwrap().coeffs * c((-0.5 * f.norm_squared()).exp(), 0.0);
            assert!((&got.coeffs - &want).norm() <= got.tail_bound, "{:.3e} vs {:.3e}", (&got.coeffs - &want).norm(), got.tail_bound);
            let g = random_f(&mut rng, 4, 0.2);
            let eg = exp_vector(&g, &tr).unwrap();
            let got = weyl_apply(&f, &eg, &tr).unwrap();
            let fg = &f + &g;
            let want = exp_vector(&fg, &tr).unwrap().coeffs * (-0.5 * f.norm_squared() - f.dotc(&g)).exp();
            let budget = got.tail_bound + exp_tail_bound(fg.norm(), tr.n_max);
            assert!((&got.coeffs - &want).norm() <= budget);
        }
    }

    #[test]
    fn weyl_composition_phase() {
        let tr = FockTruncation::abstract_modes(3, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (f, g, h) = (random_f(&mut rng, 3, 0.2), random_f(&mut rng, 3, 0.2), random_f(&mut rng, 3, 0.2));
        let probe = exp_vector(&h, &tr).unwrap();
        let wf = weyl(&f, &tr).unwrap().matrix;
        let wg = weyl(&g, &tr).unwrap().matrix;
        let wfg = weyl(&(&f + &g), &tr).unwrap().matrix;
        // Applying the exponential-vector rule twice: w(f)w(g) = e^{-i Im<f|g>} w(f+g).
        let phase = Complex64::from_polar(1.0, -f.dotc(&g).im);
        let lhs = &wf * &wg * &probe.coeffs;
        let rhs = &wfg * &probe.coeffs * phase;
        assert!((lhs - rhs).norm() < 1e-6);
        assert!((phase.norm() - 1.0).abs() < 1e-9);
        let back = &wf * weyl(&(-&f), &tr).unwrap().matrix * &probe.coeffs;
        assert!((back - &probe.coeffs).norm() < 1e-6);
    }

    #[test]
    fn mult_second_quantization() {
        let tr = FockTruncation::abstract_modes(3, 5).unwrap();
        let id = second_quantize_matrix(&DMatrix::identity(3, 3), &tr).unwrap();
        assert!((id.matrix - DMatrix::identity(tr.dim(), tr.dim())).norm() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (u, v) = (random_unitary(&mut rng, 3), random_unitary(&mut rng, 3));
        let gu = second_quantize_matrix(&u, &tr).unwrap().matrix;
        let gv = second_quantize_matrix(&v, &tr).unwrap().matrix;
        let guv = second_quantize_matrix(&(&u * &v), &tr).unwrap().matrix;
        assert!((&gu * &gv - guv).norm() < 1e-9);
        for n in 0..=5 {
            let s = tr.sector(n);
            let block = DMatrix::from_fn(s.len(), s.len(), |i, j| gu[(s[i], s[j])]);
            assert!((block.adjoint() * &block - DMatrix::identity(s.len(), s.len())).norm() < 1e-9);
        }
        let f = random_f(&mut rng, 3, 0.4);
        let lhs = &gu * exp_vector(&f, &tr).unwrap().coeffs;
        let rhs = exp_vector(&(&u * &f), &tr).unwrap().coeffs;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn swap_permutes_occupations() {
        let tr = FockTruncation::abstract_modes(3, 4).unwrap();
        let mut swap = DMatrix::zeros(3, 3);
        swap[(0, 1)] = c(1.0, 0.0);
        swap[(1, 0)] = c(1.0, 0.0);
        swap[(2, 2)] = c(1.0, 0.0);
        let g = second_quantize_matrix(&swap, &tr).unwrap().matrix;
        for (col, occ) in tr.index.iter().enumerate() {
            let row = tr.position(&[occ[1], occ[0], occ[2]]).unwrap();
            for r in 0..tr.dim() {
                let want = if r == row { 1.0 } else { 0.0 };
                assert!((g[(r, col)] - c(want, 0.0)).norm() < 1e-14);
            }
        }
        let rep = vacuum_checks(&[QuantizedOp { kind: QuantKind::MultSecondQuant, matrix: g.clone(), leakage: 0.0 }], &tr).unwrap();
        // Fixed vectors: occupations with n0 = n1 plus symmetric pairs, counted directly.
        let brute = tr.index.iter().filter(|o| o[0] <= o[1]).count();
        assert_eq!(rep.invariant_dim, brute);
        let dense = g.symmetric_eigenvalues().iter().filter(|e| (*e - 1.0).abs() < 1e-9).count();
        assert_eq!(rep.invariant_dim, dense);
    }

    #[test]
    fn number_operator_checks() {
        let tr = FockTruncation::abstract_modes(3, 4).unwrap();
        let r = number_check(&tr).unwrap();
        assert!(r.diagonal_matches_occupation);
        assert_eq!(r.additive_identity_defect, 0.0);
        let n = number_operator(&tr);
        assert_eq!(n.matrix[(0, 0)], zero());
        let i = tr.position(&[1, 1, 0]).unwrap();
        assert_eq!(n.matrix[(i, i)], c(2.0, 0.0));
    }

    #[test]
    fn vacuum_family_from_positive_generator() {
        let g = GridSpec::new(512, 16.0).unwrap();
        let modes = gaussian_hermite_modes(g, 4, 0.0, 1.5).unwrap();
        let tr = FockTruncation::new(modes, 4, DEFAULT_MAX_DIM).unwrap();
        let h = OperatorExpr::NuMult(Symbol::Exp { coeff: c(1.0, 0.0) });
        let fam = compressed_family(&h, &[0.3, 0.7, 1.1], &tr).unwrap();
        let r = vacuum_checks(&fam, &tr).unwrap();
        assert!(r.vacuum_fixed);
        assert_eq!(r.invariant_dim, 1);
        assert!(r.vacuum_expectations.iter().all(|e| (e - c(1.0, 0.0)).norm() < 1e-12));
        let id = QuantizedOp { kind: QuantKind::MultSecondQuant, matrix: DMatrix::identity(tr.dim(), tr.dim()), leakage: 0.0 };
        assert_eq!(vacuum_checks(&[id], &tr).unwrap().invariant_dim, tr.dim());
    }

    #[test]
    fn leakage_is_reported() {
        let g = GridSpec::new(512, 16.0).unwrap();
        let tr = FockTruncation::new(gaussian_hermite_modes(g, 3, 0.0, 1.0).unwrap(), 3, DEFAULT_MAX_DIM).unwrap();
        let delta_it = OperatorExpr::KappaMult(Symbol::Exp { coeff: c(0.0, 2.0 * std::f64::consts::PI * 0.2) });
        assert!(matches!(second_quantize_mult(&delta_it, &tr), Err(Error::Leakage { .. })));
        let mut loose = tr.clone();
        loose.leakage_bound = 1.0;
        let op = second_quantize_mult(&delta_it, &loose).unwrap();
        assert!(op.leakage > 1e-6);
        // The vacuum sector is untouched whatever the one-particle map.
        let om = op.apply(&tr.vacuum());
        assert!((om.coeffs - tr.vacuum().coeffs).norm() < 1e-15);
        assert!(second_quantize_mult(&OperatorExpr::Identity, &tr).unwrap().leakage < 1e-12);
        let (c0, _) = tr.project(&tr.modes[1]).unwrap();
        assert!((c0[1] - c(1.0, 0.0)).norm() < 1e-12);
        let _ = Rep::Kappa;
    }

    #[test]
    fn additive_commutator_rule() {
        let tr = FockTruncation::abstract_modes(3, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = DMatrix::from_fn(3, 3, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h = (&a + a.adjoint()) * c(0.5, 0.0);
        let dh = second_quantize_additive(&h, &tr).unwrap().matrix;
        let f = random_f(&mut rng, 3, 0.7);
        let phi = field(&f, &tr).unwrap();
        let lhs = (&dh * &phi - &phi * &dh) * c(0.0, 1.0);
        let rhs = field(&(&h * &f * c(0.0, 1.0)), &tr).unwrap();
        // Exact on sectors below the top one.
        let low: Vec<usize> = (0..tr.dim()).filter(|&i| tr.particle_number(i) < tr.n_max as u32).collect();
        for &j in &low {
            let d = (lhs.column(j) - rhs.column(j)).norm();
            assert!(d < 1e-12, "column {j}: {d:.3e}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn gamma_is_functorial(seed in 0u64..1000) {
            let tr = FockTruncation::abstract_modes(2, 4).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (u, v) = (random_unitary(&mut rng, 2), random_unitary(&mut rng, 2));
            let lhs = second_quantize_matrix(&(&u * &v), &tr).unwrap().matrix;
            let rhs = second_quantize_matrix(&u, &tr).unwrap().matrix * second_quantize_matrix(&v, &tr).unwrap().matrix;
            prop_assert!((lhs - rhs).norm() < 1e-9);
        }

        #[test]
        fn weyl_is_unitary(seed in 0u64..1000) {
            let tr = FockTruncation::abstract_modes(2, 5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = weyl(&random_f(&mut rng, 2, 0.5), &tr).unwrap().matrix;
            prop_assert!((w.adjoint() * &w - DMatrix::identity(tr.dim(), tr.dim())).norm() < 1e-10);
        }
    }
}
