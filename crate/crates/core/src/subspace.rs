//! Finitely spanned real subspaces, symplectic complements and Tomita data.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ops_core::{antilinear_times_linear, polar_decompose_antilinear, GridSpec, Rep, StateVector};

/// Singular values below this fraction of the largest count as zero.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Stacks `[Re v; Im v]`.
pub fn real_coords(v: &StateVector) -> DVector<f64> {
    let n = v.samples.len();
    DVector::from_fn(2 * n, |i, _| if i < n { v.samples[i].re } else { v.samples[i - n].im })
}

pub fn from_real_coords(grid: GridSpec, x: &[f64]) -> StateVector {
    let n = grid.n_points;
    let samples = (0..n).map(|i| Complex64::new(x[i], x[i + n])).collect();
    StateVector { grid, samples, rep: Rep::Kappa }
}

/// Orthonormal basis of the column span, with numerical rank at `rel_tol`.
pub fn orthonormal_span(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested u");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > rel_tol * smax)
        .collect();
    if keep.is_empty() {
        return DMatrix::zeros(m.nrows(), 0);
    }
    DMatrix::from_columns(&keep.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>())
}

fn numerical_rank(sv: &DVector<f64>, rel_tol: f64) -> usize {
    let smax = sv.max();
    if smax <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Real span of a list of κ-samples on a shared grid.
#[derive(Debug, Clone)]
pub struct RealSubspace {
    pub grid: GridSpec,
    /// Complex dimension of the ambient space; the grid size unless restricted.
    pub ambient_dim: usize,
    pub spanning: Vec<StateVector>,
    /// 2n × r orthonormal basis in real coordinates.
    pub basis: DMatrix<f64>,
    pub rank_tol: f64,
}

impl RealSubspace {
    pub fn new(grid: GridSpec, spanning: Vec<StateVector>) -> Result<Self> {
        Self::with_ambient(grid, spanning, grid.n_points, DEFAULT_RANK_TOL)
    }

    pub fn with_ambient(grid: GridSpec, spanning: Vec<StateVector>, ambient_dim: usize, rank_tol: f64) -> Result<Self> {
        let mut cols = Vec::with_capacity(spanning.len());
        let mut ks = Vec::with_capacity(spanning.len());
        for v in &spanning {
            grid.check_same(&v.grid)?;
            let k = v.to_rep(Rep::Kappa)?;
            if !k.is_finite() {
                return Err(Error::NonFinite("spanning vector".into()));
            }
            cols.push(real_coords(&k));
            ks.push(k);
        }
        let m = if cols.is_empty() { DMatrix::zeros(2 * grid.n_points, 0) } else { DMatrix::from_columns(&cols) };
        let basis = orthonormal_span(&m, rank_tol);
        Ok(Self { grid, ambient_dim, spanning: ks, basis, rank_tol })
    }

    pub fn real_rank(&self) -> usize {
        self.basis.ncols()
    }

    fn complex_matrix(&self) -> DMatrix<Complex64> {
        let n = self.grid.n_points;
        if self.spanning.is_empty() {
            return DMatrix::zeros(n, 0);
        }
        DMatrix::from_fn(n, self.spanning.len(), |i, j| self.spanning[j].samples[i])
    }

    /// Orthogonal projection onto the real span, in real coordinates.
    pub fn project(&self, v: &StateVector) -> Result<StateVector> {
        self.grid.check_same(&v.grid)?;
        let x = real_coords(&v.to_rep(Rep::Kappa)?);
        let p = &self.basis * (self.basis.transpose() * x);
        Ok(from_real_coords(self.grid, p.as_slice()))
    }

    /// Basis of the real subspace orthogonal (for `Re<·|·>`) to `basis`.
    fn orthogonal_basis(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let dim = b.nrows();
        let r = b.ncols();
        let mut aug = DMatrix::zeros(dim, r + dim);
        aug.view_mut((0, 0), (dim, r)).copy_from(b);
        aug.view_mut((0, r), (dim, dim)).fill_with_identity();
        let q = aug.qr().q();
        q.columns(r, dim - r).into_owned()
    }
}

/// Multiplication by `i` in real coordinates: `(x, y) ↦ (-y, x)`.
fn times_i(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows() / 2;
    let mut out = DMatrix::zeros(b.nrows(), b.ncols());
    out.rows_mut(0, n).copy_from(&(-b.rows(n, n)));
    out.rows_mut(n, n).copy_from(&b.rows(0, n));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Standardness {
    pub cyclic: bool,
    pub separating: bool,
    pub real_rank: usize,
    pub complex_rank: usize,
}

pub fn standardness(r: &RealSubspace) -> Standardness {
    let real_rank = r.real_rank();
    let complex_rank = if r.spanning.is_empty() {
        0
    } else {
        numerical_rank(&r.complex_matrix().singular_values(), r.rank_tol)
    };
    Standardness {
        cyclic: complex_rank == r.ambient_dim,
        separating: complex_rank == real_rank,
        real_rank,
        complex_rank,
    }
}

/// `{ψ : Im<ψ|φ> = 0 for all φ ∈ R}`. Since `Im<ψ|φ> = Re<iψ|φ>`, this is `i·(R^⊥)`.
pub fn complement(r: &RealSubspace) -> RealSubspace {
    let perp = r.orthogonal_basis(&r.basis);
    let basis = times_i(&perp);
    let spanning = (0..basis.ncols()).map(|j| from_real_coords(r.grid, basis.column(j).as_slice())).collect();
    RealSubspace { grid: r.grid, ambient_dim: r.ambient_dim, spanning, basis, rank_tol: r.rank_tol }
}

/// Largest principal-angle sine from `a` into `b`: `||(I - P_b) Q_a||`.
pub fn containment_gap(a: &RealSubspace, b: &RealSubspace) -> f64 {
    if a.real_rank() == 0 {
        return 0.0;
    }
    let resid = &a.basis - &b.basis * (b.basis.transpose() * &a.basis);
    resid.singular_values().max()
}

/// Symmetric gap `max(gap(a→b), gap(b→a))`; zero iff the spans agree.
pub fn subspace_gap(a: &RealSubspace, b: &RealSubspace) -> f64 {
    containment_gap(a, b).max(containment_gap(b, a))
}

/// Tomita data on the complex span `W = R + iR`, in the coordinates of an orthonormal basis `Q` of `W`.
#[derive(Debug, Clone)]
pub struct ModularData {
    pub grid: GridSpec,
    /// n × m orthonormal basis of `W`.
    pub q: DMatrix<Complex64>,
    /// `S c = s·conj(c)` on coordinates.
    pub s: DMatrix<Complex64>,
    pub j: DMatrix<Complex64>,
    pub delta: DMatrix<Complex64>,
    pub delta_sqrt: DMatrix<Complex64>,
    delta_eigvecs: DMatrix<Complex64>,
    log_delta_eigvals: Vec<f64>,
}

impl ModularData {
    pub fn dim(&self) -> usize {
        self.q.ncols()
    }

    pub fn coords(&self, v: &StateVector) -> Result<DVector<Complex64>> {
        self.grid.check_same(&v.grid)?;
        let k = v.to_rep(Rep::Kappa)?;
        Ok(self.q.adjoint() * DVector::from_column_slice(&k.samples))
    }

    pub fn embed(&self, c: &DVector<Complex64>) -> StateVector {
        let x = &self.q * c;
        StateVector { grid: self.grid, samples: x.as_slice().to_vec(), rep: Rep::Kappa }
    }

    /// Orthogonal projection onto `W`.
    pub fn project(&self, v: &StateVector) -> Result<StateVector> {
        Ok(self.embed(&self.coords(v)?))
    }

    /// `J Δ^{1/2}` on `P_W v`.
    pub fn apply_s(&self, v: &StateVector) -> Result<StateVector> {
        let c = self.coords(v)?;
        Ok(self.embed(&(&self.s * c.map(|z| z.conj()))))
    }

    pub fn apply_j(&self, v: &StateVector) -> Result<StateVector> {
        let c = self.coords(v)?;
        Ok(self.embed(&(&self.j * c.map(|z| z.conj()))))
    }

    /// `Δ^{z}` restricted to `W`, via the eigenbasis of `Δ`.
    pub fn delta_pow_matrix(&self, z: Complex64) -> DMatrix<Complex64> {
        let m = self.dim();
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            m,
            self.log_delta_eigvals.iter().map(|&l| (Complex64::new(l, 0.0) * z).exp()),
        ));
        &self.delta_eigvecs * d * self.delta_eigvecs.adjoint()
    }

    /// `Δ^{z} P_W v`.
    pub fn apply_delta_pow(&self, z: Complex64, v: &StateVector) -> Result<StateVector> {
        let c = self.coords(v)?;
        Ok(self.embed(&(self.delta_pow_matrix(z) * c)))
    }

    /// `||J² - I||` on `W`.
    pub fn j_square_residual(&self) -> f64 {
        let m = self.dim();
        (&self.j * self.j.map(|z| z.conj()) - DMatrix::<Complex64>::identity(m, m)).norm()
    }

    /// `||JΔJ - Δ^{-1}|| / ||Δ^{-1}||`.
    pub fn j_delta_j_residual(&self) -> f64 {
        let jdj = &self.j * self.delta.map(|z| z.conj()) * self.j.map(|z| z.conj());
        let dinv = self.delta_pow_matrix(Complex64::new(-1.0, 0.0));
        (&jdj - &dinv).norm() / dinv.norm()
    }

    /// `||S - JΔ^{1/2}|| / ||S||`.
    pub fn reconstruction_residual(&self) -> f64 {
        (antilinear_times_linear(&self.j, &self.delta_sqrt) - &self.s).norm() / self.s.norm()
    }
}

/// Builds `S: ψ + iφ ↦ ψ - iφ` on `W = R + iR` and polar-decomposes it.
///
/// The spanning vectors must be complex-linearly independent (`R ∩ iR = 0`).
/// Cyclicity is taken relative to `W` itself.
pub fn tomita_from_span(r: &RealSubspace) -> Result<ModularData> {
    let st = standardness(r);
    if r.spanning.is_empty() {
        return Err(Error::NotStandard("empty span".into()));
    }
    if !st.separating {
        return Err(Error::NotStandard(format!(
            "R ∩ iR ≠ 0: complex rank {} < real rank {}",
            st.complex_rank, st.real_rank
        )));
    }
    if st.complex_rank < r.spanning.len() {
        return Err(Error::NotStandard(format!(
            "spanning set is real-linearly dependent: rank {} of {}",
            st.complex_rank,
            r.spanning.len()
        )));
    }
    let f = r.complex_matrix();
    let qr = f.qr();
    let q = qr.q();
    let rr = qr.r();
    let rinv = rr.clone().try_inverse().ok_or_else(|| Error::Singular("triangular factor".into()))?;
    let s = &rr * rinv.map(|z| z.conj());
    let p = polar_decompose_antilinear(&s, 1e-14)?;
    let eig = p.log_delta.clone().symmetric_eigen();
    Ok(ModularData {
        grid: r.grid,
        q,
        s,
        j: p.j,
        delta: p.delta,
        delta_sqrt: p.delta_sqrt,
        delta_eigvecs: eig.eigenvectors,
        log_delta_eigvals: eig.eigenvalues.iter().copied().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub projection_residual: f64,
    pub bilinear_residual: f64,
}

/// Span distance to `R` and the worst normalized `|Im<f|g'>|` over the `R'` spanning set.
pub fn membership_residual(f: &StateVector, r: &RealSubspace, rprime: &RealSubspace) -> Result<Membership> {
    let fk = f.to_rep(Rep::Kappa)?;
    let nf = fk.norm();
    let proj = r.project(&fk)?;
    let projection_residual = if nf == 0.0 { 0.0 } else { fk.sub(&proj)?.norm() / nf };
    Ok(Membership { projection_residual, bilinear_residual: bilinear_residual(&fk, rprime)? })
}

pub fn bilinear_residual(f: &StateVector, rprime: &RealSubspace) -> Result<f64> {
    let fk = f.to_rep(Rep::Kappa)?;
    let nf = fk.norm();
    let mut worst: f64 = 0.0;
    for g in &rprime.spanning {
        let ng = g.norm();
        if nf == 0.0 || ng == 0.0 {
            continue;
        }
        worst = worst.max(fk.inner(g)?.im.abs() / (nf * ng));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops_core::{OperatorExpr, Symbol};
    use crate::schrodinger::AnalyticVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn c1() -> GridSpec {
        // single-point ambient spaces are modelled on an 8-point grid with 7 samples pinned to zero
        GridSpec::new(8, 1.0).unwrap()
    }

    fn point(z: Complex64) -> StateVector {
        let mut v = StateVector::zeros(c1(), Rep::Kappa);
        v.samples[3] = z;
        v
    }

    fn line(z: Complex64) -> RealSubspace {
        RealSubspace::with_ambient(c1(), vec![point(z)], 1, DEFAULT_RANK_TOL).unwrap()
    }

    #[test]
    fn real_line_is_standard() {
        let s = standardness(&line(c(1.0, 0.0)));
        assert!(s.cyclic && s.separating);
    }

    #[test]
    fn whole_plane_is_not_separating() {
        let r = RealSubspace::with_ambient(c1(), vec![point(c(1.0, 0.0)), point(c(0.0, 1.0))], 1, DEFAULT_RANK_TOL).unwrap();
        let s = standardness(&r);
        assert!(s.cyclic && !s.separating);
        assert!(matches!(tomita_from_span(&r), Err(Error::NotStandard(_))));
    }

    #[test]
    fn complement_of_lines() {
        for theta in [0.0, PI / 4.0] {
            let r = line(Complex64::from_polar(1.0, theta));
            let rc = complement(&r);
            // restrict attention to the active coordinate
            let v = rc.project(&point(Complex64::from_polar(1.0, theta))).unwrap();
            assert!((v.samples[3] - Complex64::from_polar(1.0, theta)).norm() < 1e-12);
            let w = rc.project(&point(Complex64::from_polar(1.0, theta + PI / 2.0))).unwrap();
            assert!(w.samples[3].norm() < 1e-12);
        }
    }

    #[test]
    fn tomita_of_real_line() {
        let m = tomita_from_span(&line(c(1.0, 0.0))).unwrap();
        assert_eq!(m.dim(), 1);
        assert!((m.delta[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        // J is conjugation in the coordinate whose basis vector is real up to a phase
        let v = point(c(0.3, 0.8));
        let jv = m.apply_j(&v).unwrap();
        assert!((jv.samples[3] - c(0.3, -0.8)).norm() < 1e-14);
    }

    #[test]
    fn two_dimensional_tomita_matches_real_solve() {
        // R spanned by (1,0) and u(cos α, sin α) inside the first two samples.
        let g = c1();
        let (alpha, u) = (0.6f64, Complex64::from_polar(1.0, 1.1));
        let mut v1 = StateVector::zeros(g, Rep::Kappa);
        v1.samples[0] = c(1.0, 0.0);
        let mut v2 = StateVector::zeros(g, Rep::Kappa);
        v2.samples[0] = u * alpha.cos();
        v2.samples[1] = u * alpha.sin();
        let r = RealSubspace::with_ambient(g, vec![v1.clone(), v2.clone()], 2, DEFAULT_RANK_TOL).unwrap();
        let m = tomita_from_span(&r).unwrap();
        // 4x4 real oracle: S maps x1 v1 + x2 v2 + i(y1 v1 + y2 v2) to the conjugate combination.
        let cols = [&v1, &v2];
        let to4 = |s: &StateVector| DVector::from_vec(vec![s.samples[0].re, s.samples[1].re, s.samples[0].im, s.samples[1].im]);
        let b = DMatrix::from_columns(&[to4(cols[0]), to4(cols[1]), to4(&cols[0].scale(Complex64::i())), to4(&cols[1].scale(Complex64::i()))]);
        let img = DMatrix::from_columns(&[to4(cols[0]), to4(cols[1]), -to4(&cols[0].scale(Complex64::i())), -to4(&cols[1].scale(Complex64::i()))]);
        let s_real = img * b.try_inverse().unwrap();
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut p = StateVector::zeros(g, Rep::Kappa);
            p.samples[0] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            p.samples[1] = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let got = m.apply_s(&p).unwrap();
            let want = &s_real * to4(&p);
            assert!((to4(&got) - want).norm() < 1e-12);
        }
        let mut eig: Vec<f64> = m.delta.clone().symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((eig[0] - 1.0).abs() > 0.1);
        let s_eig = (s_real.transpose() * &s_real).symmetric_eigenvalues();
        let mut s_eig: Vec<f64> = s_eig.iter().copied().collect();
        s_eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((s_eig[0] - eig[0]).abs() < 1e-10 && (s_eig[3] - eig[1]).abs() < 1e-10);
        assert!(m.j_square_residual() < 1e-8);
        assert!(m.j_delta_j_residual() < 1e-6);
        assert!(m.reconstruction_residual() < 1e-8);
    }

    fn wedge_vector(grid: GridSpec, g: &AnalyticVector, sign: f64) -> StateVector {
        // g + e^{∓πκ}·conj g(-κ) on the grid, with the unpaired sample zeroed
        let gv = g.realize(grid).unwrap();
        let flip = OperatorExpr::compose([
            OperatorExpr::KappaMult(Symbol::Exp { coeff: c(-sign * PI, 0.0) }),
            OperatorExpr::ConjFlip,
        ])
        .apply(&gv)
        .unwrap();
        let mut f = gv.add(&flip).unwrap();
        f.samples[0] = c(0.0, 0.0);
        f
    }

    /// Seeds on the side where the flipped term is damped: left for r, right for r'.
    fn seeds(count: usize, side: f64, offset: f64) -> Vec<AnalyticVector> {
        (0..count)
            .map(|i| {
                let ph = Complex64::from_polar(1.0, 0.37 * i as f64);
                AnalyticVector::new(side * (0.5 * i as f64 + offset), 0.4, (i % 3) as u32, ph)
            })
            .collect()
    }

    #[test]
    fn wedge_span_rank_grows_and_stays_separating() {
        let g = GridSpec::new(256, 14.0).unwrap();
        let mut last = 0;
        for count in [5, 10, 20] {
            let vs: Vec<_> = seeds(count, -1.0, 0.0).iter().map(|s| wedge_vector(g, s, 1.0)).collect();
            let r = RealSubspace::with_ambient(g, vs, g.n_points - 1, DEFAULT_RANK_TOL).unwrap();
            let s = standardness(&r);
            assert!(s.separating && !s.cyclic);
            assert!(s.real_rank > last);
            last = s.real_rank;
        }
    }

    #[test]
    fn wedge_complement_contains_prime_span() {
        let g = GridSpec::new(256, 14.0).unwrap();
        let r = RealSubspace::new(g, seeds(20, -1.0, 0.0).iter().map(|s| wedge_vector(g, s, 1.0)).collect()).unwrap();
        let rp = RealSubspace::new(g, seeds(20, 1.0, 0.05).iter().map(|s| wedge_vector(g, s, -1.0)).collect()).unwrap();
        let rc = complement(&r);
        assert!(containment_gap(&rp, &rc) <= 1e-3);
        assert!(containment_gap(&r, &complement(&rp)) <= 1e-3);
        for f in &r.spanning {
            let m = membership_residual(f, &r, &rp).unwrap();
            assert!(m.projection_residual < 1e-12 && m.bilinear_residual < 1e-12);
        }
        // i·g' pairs purely imaginary with g'
        let ig = rp.spanning[3].scale(Complex64::i());
        let b = bilinear_residual(&ig, &rp).unwrap();
        assert!(b > 0.5, "{b}");
    }

    #[test]
    fn wedge_tomita_fixed_points_and_complement() {
        let g = GridSpec::new(256, 8.0).unwrap();
        let r = RealSubspace::new(g, seeds(8, -1.0, 0.0).iter().map(|s| wedge_vector(g, s, 1.0)).collect()).unwrap();
        let m = tomita_from_span(&r).unwrap();
        for f in &r.spanning {
            assert!(m.apply_s(f).unwrap().rel_diff(f).unwrap() < 1e-9);
        }
        assert!(m.j_square_residual() < 1e-8);
        assert!(m.j_delta_j_residual() < 1e-6);
        // J Δ^{-1/2} fixes R' ∩ W: build the complement inside W
        let wbasis: Vec<_> = (0..m.dim())
            .map(|k| m.embed(&DVector::from_fn(m.dim(), |i, _| if i == k { c(1.0, 0.0) } else { c(0.0, 0.0) })))
            .collect();
        let mut w_real = wbasis.clone();
        w_real.extend(wbasis.iter().map(|v| v.scale(Complex64::i())));
        let wr = RealSubspace::new(g, w_real).unwrap();
        let rc = complement(&r);
        // R' ∩ W = P_W-directions of the complement that already lie in W
        let inside: Vec<_> = rc.spanning.iter().map(|v| wr.project(v).unwrap()).filter(|p| p.norm() > 1e-6).collect();
        let inside_span = RealSubspace::new(g, inside).unwrap();
        let rc_in_w: Vec<_> = (0..inside_span.real_rank())
            .map(|j| from_real_coords(g, inside_span.basis.column(j).as_slice()))
            .filter(|v| rc.project(v).unwrap().rel_diff(v).unwrap() < 1e-8)
            .collect();
        assert!(!rc_in_w.is_empty());
        let jdm = m.delta_pow_matrix(c(-0.5, 0.0));
        for v in &rc_in_w {
            let cv = m.coords(v).unwrap();
            let img = m.embed(&(&m.j * (&jdm * cv).map(|z| z.conj())));
            assert!(img.rel_diff(v).unwrap() < 1e-6);
        }
    }

    fn random_vecs(g: GridSpec, count: usize, seed: u64) -> Vec<StateVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let s = (0..g.n_points).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
                StateVector::new(g, s, Rep::Kappa).unwrap()
            })
            .collect()
    }

    proptest! {
        #[test]
        fn double_complement_is_identity(seed in 0u64..200, count in 1usize..10) {
            let g = GridSpec::new(8, 1.0).unwrap();
            let r = RealSubspace::new(g, random_vecs(g, count, seed)).unwrap();
            let cc = complement(&complement(&r));
            prop_assert!(subspace_gap(&r, &cc) <= 1e-10);
        }

        #[test]
        fn random_standard_subspaces_give_consistent_modular_data(seed in 0u64..200, count in 1usize..6) {
            let g = GridSpec::new(8, 1.0).unwrap();
            let r = RealSubspace::new(g, random_vecs(g, count, seed)).unwrap();
            let m = tomita_from_span(&r).unwrap();
            prop_assert!(m.reconstruction_residual() <= 1e-8);
            prop_assert!(m.j_square_residual() <= 1e-8);
            prop_assert!(m.j_delta_j_residual() <= 1e-6);
            // fixed points of S have the real rank of R
            let fixed: Vec<_> = r.spanning.iter().map(|f| m.apply_s(f).unwrap().rel_diff(f).unwrap()).collect();
            prop_assert!(fixed.iter().all(|&e| e < 1e-9));
        }
    }
}
