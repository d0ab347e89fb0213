use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric κ-window `[-kappa_max, kappa_max)` sampled at `n_points` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_points: usize,
    pub kappa_max: f64,
}

impl GridSpec {
    pub fn new(n_points: usize, kappa_max: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "n_points must be even and >= 8, got {n_points}"
            )));
        }
        if !(kappa_max.is_finite() && kappa_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "kappa_max must be positive and finite, got {kappa_max}"
            )));
        }
        Ok(Self { n_points, kappa_max })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.kappa_max / self.n_points as f64
    }

    pub fn kappa(&self, j: usize) -> f64 {
        -self.kappa_max + j as f64 * self.step()
    }

    /// Spacing of the induced ν grid, `π / kappa_max`.
    pub fn nu_step(&self) -> f64 {
        PI / self.kappa_max
    }

    /// Centered frequency: `ν_k = (k - n/2)·π/kappa_max`.
    pub fn nu(&self, k: usize) -> f64 {
        (k as f64 - (self.n_points / 2) as f64) * self.nu_step()
    }

    /// Largest |ν| on the grid.
    pub fn nu_max(&self) -> f64 {
        (self.n_points / 2) as f64 * self.nu_step()
    }

    pub fn kappas(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.kappa(j)).collect()
    }

    pub fn nus(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.nu(k)).collect()
    }

    /// Index map of κ -> -κ. Exact for every index except 0, which maps to itself.
    pub fn flip_index(&self, j: usize) -> usize {
        (self.n_points - j) % self.n_points
    }

    pub fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.n_points != other.n_points || self.kappa_max != other.kappa_max {
            return Err(Error::GridMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.n_points, self.kappa_max, other.n_points, other.kappa_max
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Kappa,
    Nu,
}

/// Samples carry the trapezoid weight `sqrt(step)` so that the plain l2 norm is the L2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub grid: GridSpec,
    pub samples: Vec<Complex64>,
    pub rep: Rep,
}

impl StateVector {
    pub fn new(grid: GridSpec, samples: Vec<Complex64>, rep: Rep) -> Result<Self> {
        if samples.len() != grid.n_points {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {} points",
                samples.len(),
                grid.n_points
            )));
        }
        Ok(Self { grid, samples, rep })
    }

    pub fn zeros(grid: GridSpec, rep: Rep) -> Self {
        Self { grid, samples: vec![Complex64::new(0.0, 0.0); grid.n_points], rep }
    }

    /// Samples `sqrt(step)·f(κ_j)`.
    pub fn from_kappa_fn(grid: GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        let w = grid.step().sqrt();
        let samples = (0..grid.n_points).map(|j| f(grid.kappa(j)) * w).collect();
        Self { grid, samples, rep: Rep::Kappa }
    }

    /// Samples `sqrt(nu_step)·g(ν_k)`.
    pub fn from_nu_fn(grid: GridSpec, g: impl Fn(f64) -> Complex64) -> Self {
        let w = grid.nu_step().sqrt();
        let samples = (0..grid.n_points).map(|k| g(grid.nu(k)) * w).collect();
        Self { grid, samples, rep: Rep::Nu }
    }

    pub fn delta(grid: GridSpec, j: usize) -> Self {
        let mut v = Self::zeros(grid, Rep::Kappa);
        v.samples[j] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`, antilinear in `self`. Both vectors must share a representation.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        self.grid.check_same(&other.grid)?;
        if self.rep != other.rep {
            return Err(Error::RepMismatch { expected: self.rep, found: other.rep });
        }
        Ok(self.samples.iter().zip(&other.samples).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|&z| f(z)).collect(), rep: self.rep }
    }

    pub fn add(&self, other: &StateVector) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &StateVector) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &StateVector, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        if self.rep != other.rep {
            return Err(Error::RepMismatch { expected: self.rep, found: other.rep });
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, samples, rep: self.rep })
    }

    /// `||self - other|| / ||other||`, in whichever representation `self` carries.
    pub fn rel_diff(&self, other: &StateVector) -> Result<f64> {
        let other = other.to_rep(self.rep)?;
        let d = self.sub(&other)?.norm();
        let n = other.norm();
        Ok(if n == 0.0 { d } else { d / n })
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn to_nu(&self) -> Result<Self> {
        if self.rep != Rep::Kappa {
            return Err(Error::RepMismatch { expected: Rep::Kappa, found: self.rep });
        }
        Ok(Self { grid: self.grid, samples: centered_dft(&self.samples, false), rep: Rep::Nu })
    }

    pub fn to_kappa(&self) -> Result<Self> {
        if self.rep != Rep::Nu {
            return Err(Error::RepMismatch { expected: Rep::Nu, found: self.rep });
        }
        Ok(Self { grid: self.grid, samples: centered_dft(&self.samples, true), rep: Rep::Kappa })
    }

    /// Converts if needed.
    pub fn to_rep(&self, rep: Rep) -> Result<Self> {
        match (self.rep, rep) {
            (a, b) if a == b => Ok(self.clone()),
            (Rep::Kappa, Rep::Nu) => self.to_nu(),
            _ => self.to_kappa(),
        }
    }
}

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

#[inline]
fn alt(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Unitary DFT between κ samples and centered ν samples.
///
/// Forward: `t_k = n^{-1/2} (-1)^{k-n/2} Σ_j (-1)^j s_j e^{-2πi kj/n}`, which is the
/// sampled continuum transform `(2π)^{-1/2} ∫ f(κ) e^{-iνκ} dκ`.
pub fn centered_dft(input: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = input.len();
    let half_sign = alt(n / 2);
    let scale = 1.0 / (n as f64).sqrt();
    let mut buf: Vec<Complex64> = if inverse {
        input.iter().enumerate().map(|(k, &t)| t * (alt(k) * half_sign)).collect()
    } else {
        input.iter().enumerate().map(|(j, &s)| s * alt(j)).collect()
    };
    plan(n, inverse).process(&mut buf);
    if inverse {
        buf.iter().enumerate().map(|(j, &b)| b * (alt(j) * scale)).collect()
    } else {
        buf.iter().enumerate().map(|(k, &b)| b * (alt(k) * half_sign * scale)).collect()
    }
}
