//! Two-mode squeezing kernel on a signed frequency grid and the
//! truncated-series Bogoliubov map it generates.
//!
//! Negative frequencies label creation operators through â(−ω) = â†(ω), so
//! the annihilation/creation structure of the transformation lives in the
//! sign structure of one matrix. The metric Σ = diag(sign ω) encodes the
//! commutator [â(ω), â(ω′)] = δ(ω+ω′)(sign ω − sign ω′)/2; a map U preserves
//! it exactly when U Σ U† = Σ.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::drive::{CrystalParams, DrivePulse};

#[derive(Debug, Clone, Error)]
pub enum KernelError {
    #[error("signed grid needs an even point count of at least 4, got {n}")]
    GridSize { n: usize },
    #[error("grid extent must be positive, got {omega_max}")]
    GridExtent { omega_max: f64 },
    #[error("CW drives have a delta-pair spectrum; the discretised kernel requires a pulsed drive")]
    CwDrive,
    #[error("series order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },
}

/// Uniform signed grid, symmetric about zero and excluding it: the points are
/// ±(k − 1/2)Δω for k = 1..n/2, so ω is on the grid exactly when −ω is.
#[derive(Debug, Clone)]
pub struct SignedFrequencyGrid {
    omega_max: f64,
    delta: f64,
    points: Vec<f64>,
}

impl SignedFrequencyGrid {
    pub fn new(omega_max: f64, n: usize) -> Result<Self, KernelError> {
        if n < 4 || n % 2 != 0 {
            return Err(KernelError::GridSize { n });
        }
        if !(omega_max > 0.0) {
            return Err(KernelError::GridExtent { omega_max });
        }
        let delta = 2.0 * omega_max / n as f64;
        let mut points = vec![0.0; n];
        for k in 0..n / 2 {
            let omega = (k as f64 + 0.5) * delta;
            points[n / 2 + k] = omega;
            points[n / 2 - 1 - k] = -omega;
        }
        Ok(SignedFrequencyGrid { omega_max, delta, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Index of −ω given the index of ω.
    pub fn flip(&self, idx: usize) -> usize {
        self.points.len() - 1 - idx
    }

    /// Indices of the positive-frequency half, ascending.
    pub fn positive_indices(&self) -> std::ops::Range<usize> {
        self.points.len() / 2..self.points.len()
    }
}

/// Discretised commutator weight (sign ω − sign ω′)/2 without the delta.
pub fn commutator_weight(omega: f64, omega_prime: f64) -> f64 {
    0.5 * (omega.signum() - omega_prime.signum())
}

/// Dense complex matrix, row major. Small on purpose: the kernel needs only
/// multiplication, scaled accumulation and a few norms.
#[derive(Debug, Clone)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        out.data.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (r, &b) in row.iter_mut().zip(rhs_row) {
                    *r += a * b;
                }
            }
        });
        out
    }

    pub fn scale(&mut self, s: Complex64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add_assign(&mut self, other: &CMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// The discretised squeezing kernel Ξ with entries
/// iC sign(ω′) √|ω ω′| E(ω − ω′) Δω on the signed grid.
#[derive(Debug, Clone)]
pub struct SqueezeKernel {
    grid: SignedFrequencyGrid,
    matrix: CMatrix,
}

impl SqueezeKernel {
    pub fn build(
        pulse: &DrivePulse,
        params: &CrystalParams,
        grid: SignedFrequencyGrid,
    ) -> Result<Self, KernelError> {
        if pulse.is_cw() {
            return Err(KernelError::CwDrive);
        }
        let c = params.coupling();
        let n = grid.len();
        let pts = grid.points();
        let delta = grid.delta();
        let mut matrix = CMatrix::zeros(n);
        matrix
            .data
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(k, row)| {
                let omega = pts[k];
                for (l, entry) in row.iter_mut().enumerate() {
                    let omega_prime = pts[l];
                    let field = pulse
                        .field_freq(omega - omega_prime)
                        .expect("pulsed drives have pointwise spectra");
                    let weight = omega_prime.signum() * (omega * omega_prime).abs().sqrt() * delta;
                    *entry = Complex64::new(0.0, c) * weight * field;
                }
            });
        Ok(SqueezeKernel { grid, matrix })
    }

    pub fn grid(&self) -> &SignedFrequencyGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// max |Ξ Σ + Σ Ξ†|: zero (to rounding) for any real drive field, which
    /// is what makes the exponential of the kernel metric preserving.
    pub fn generator_residual(&self) -> f64 {
        let n = self.grid.len();
        let pts = self.grid.points();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let term = self.matrix.at(i, j) * pts[j].signum()
                    + pts[i].signum() * self.matrix.at(j, i).conj();
                worst = worst.max(term.norm());
            }
        }
        worst
    }
}

/// Truncated-series Bogoliubov map U(z̃) = Σ_{m≤order} (z̃Ξ)^m / m!.
///
/// The truncation order is the perturbation order of the expansion — the
/// map is used to organise the physics order by order, not as a
/// scaling-and-squaring approximation of the exponential.
#[derive(Debug, Clone)]
pub struct BogoliubovMap {
    grid: SignedFrequencyGrid,
    matrix: CMatrix,
    order: usize,
    z_tilde: f64,
}

/// Generous cap; factorial convergence makes higher orders pointless in f64.
pub const MAX_SERIES_ORDER: usize = 64;

pub fn expand_bogoliubov(
    kernel: &SqueezeKernel,
    z_tilde: f64,
    order: usize,
) -> Result<BogoliubovMap, KernelError> {
    if order > MAX_SERIES_ORDER {
        return Err(KernelError::OrderTooLarge { order, max: MAX_SERIES_ORDER });
    }
    let n = kernel.grid.len();
    let mut scaled = kernel.matrix.clone();
    scaled.scale(Complex64::new(z_tilde, 0.0));

    let mut acc = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    for m in 1..=order {
        // The first power needs no matmul; that keeps truncation at the
        // linear map cheap even on fine grids.
        term = if m == 1 { scaled.clone() } else { term.mul(&scaled) };
        term.scale(Complex64::new(1.0 / m as f64, 0.0));
        acc.add_assign(&term);
    }
    Ok(BogoliubovMap { grid: kernel.grid.clone(), matrix: acc, order, z_tilde })
}

impl BogoliubovMap {
    pub fn grid(&self) -> &SignedFrequencyGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn z_tilde(&self) -> f64 {
        self.z_tilde
    }

    /// max |U Σ U† − Σ| with Σ = diag(sign ω): the discrete measure of how
    /// well the map preserves the signed-frequency commutator.
    pub fn symplectic_residual(&self) -> f64 {
        let n = self.grid.len();
        let pts = self.grid.points();
        let u = &self.matrix;
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut worst: f64 = 0.0;
                for j in 0..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        acc += u.at(i, k) * pts[k].signum() * u.at(j, k).conj();
                    }
                    if i == j {
                        acc -= pts[i].signum();
                    }
                    worst = worst.max(acc.norm());
                }
                worst
            })
            .collect();
        rows.into_iter().fold(0.0, f64::max)
    }

    /// max |U(−ω,−ω′) − U*(ω,ω′)|: conjugation symmetry inherited from the
    /// reality of the drive field.
    pub fn conjugation_residual(&self) -> f64 {
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let diff =
                    self.matrix.at(self.grid.flip(i), self.grid.flip(j)) - self.matrix.at(i, j).conj();
                worst = worst.max(diff.norm());
            }
        }
        worst
    }

    /// Photon occupation per unit frequency on the positive half-grid:
    /// ρ(ω_k) = Σ_{ω_l < 0} |U_{kl}|² / Δω.
    pub fn occupation_spectrum(&self) -> Vec<(f64, f64)> {
        let pts = self.grid.points();
        let half = pts.len() / 2;
        let delta = self.grid.delta();
        self.grid
            .positive_indices()
            .map(|k| {
                let mut acc = 0.0;
                for l in 0..half {
                    acc += self.matrix.at(k, l).norm_sqr();
                }
                (pts[k], acc / delta)
            })
            .collect()
    }
}
