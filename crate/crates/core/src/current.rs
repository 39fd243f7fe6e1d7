//! Probability current at the origin and the flux it carries over one
//! backflow window.
//!
//! For a positive-energy Dirac wavepacket with momentum envelope `g(r)`
//! (`∫|g|² dr = 1`), the dimensionless current `J(τ) = T · j(0, τT)` is
//!
//! ```text
//! J(τ) = 4/(π ε) · Re[ conj(A(τ)) · B(τ) ]
//! A(τ) = ∫ U₁(r) g(r) exp(−4iγ(r)τ/ε²) dr,   B(τ) likewise with U₂
//! ```
//!
//! with spinor components `U₁ = sqrt((γ+1)/(2γ))`, `U₂ = sqrt((γ−1)/(2γ))`.
//! Integrating over `τ ∈ [0, 1]` reproduces the kernel's bilinear form, so the
//! flux of the eigenvector equals its eigenvalue.

use std::io::{self, Write};

use num_complex::Complex;

use crate::eigen::EigenSolution;
use crate::error::{domain, Result};
use crate::grid::QuadGrid;
use crate::kernel::KernelMatrix;
use crate::params::EpsilonParams;
use crate::scalar::Real;

/// Complex momentum envelope sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope<T> {
    pub grid: QuadGrid<T>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> Envelope<T> {
    /// `g(r_i) = exp(+2iγ(r_i)/ε²) · η(r_i)`, which centres the backflow
    /// window on `τ = 1/2`.
    pub fn from_real(grid: &QuadGrid<T>, eta: &[T], eps: EpsilonParams<T>) -> Result<Self> {
        if eps.is_non_relativistic() {
            return domain("current reconstruction needs epsilon > 0");
        }
        if eta.len() != grid.len() {
            return domain("eta length does not match the grid");
        }
        let e2 = eps.epsilon() * eps.epsilon();
        let values = grid
            .nodes()
            .iter()
            .zip(eta)
            .map(|(&r, &x)| Complex::from_polar(x, T::lit(2.0) * eps.gamma(r) / e2))
            .collect();
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// `Σ w_i |g_i|²`.
    pub fn norm_sqr(&self) -> T {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .fold(T::zero(), |acc, (&w, g)| acc + w * g.norm_sqr())
    }

    /// Multiply by a global phase `exp(iθ)`.
    pub fn rotated(&self, theta: T) -> Self {
        let ph = Complex::from_polar(T::one(), theta);
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&g| g * ph).collect(),
        }
    }
}

/// Envelope of a converged eigenvector.
pub fn envelope_from_eigvec<T: Real>(sol: &EigenSolution<T>) -> Result<Envelope<T>> {
    Envelope::from_real(&sol.grid, &sol.eta, sol.eps)
}

/// Sampled current `J(τ)` on `τ ∈ [0, 1]` and its trapezoidal integral.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentTrace<T> {
    pub eps: EpsilonParams<T>,
    pub taus: Vec<T>,
    pub current: Vec<T>,
    pub delta: T,
}

impl<T: Real> CurrentTrace<T> {
    /// Number of sign changes of `J` along the τ grid.
    pub fn sign_changes(&self) -> usize {
        self.current
            .windows(2)
            .filter(|w| (w[0] < T::zero()) != (w[1] < T::zero()))
            .count()
    }

    /// Smallest sampled `J`.
    pub fn min_current(&self) -> T {
        self.current.iter().copied().fold(T::infinity(), T::min)
    }

    /// `(τ_start, τ_end)` of the longest run of negative current, if any.
    pub fn longest_negative_interval(&self) -> Option<(T, T)> {
        let mut best: Option<(usize, usize)> = None;
        let mut start = None;
        for (i, &j) in self.current.iter().enumerate() {
            match (j < T::zero(), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    if best.is_none_or(|(a, b)| i - 1 - s > b - a) {
                        best = Some((s, i - 1));
                    }
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            let e = self.current.len() - 1;
            if best.is_none_or(|(a, b)| e - s > b - a) {
                best = Some((s, e));
            }
        }
        best.map(|(a, b)| (self.taus[a], self.taus[b]))
    }

    /// CSV with header `tau,J`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "tau,J")?;
        for (t, j) in self.taus.iter().zip(&self.current) {
            writeln!(out, "{:.16e},{:.16e}", t, j)?;
        }
        Ok(())
    }
}

/// Time samples needed to resolve the `O(1/ε²)` oscillations of `J`.
pub fn default_n_tau<T: Real>(eps: EpsilonParams<T>) -> usize {
    let e = eps.epsilon().to_f64_lossy();
    if e <= 0.0 {
        return 4001;
    }
    4001usize.max((40.0 / (e * e)).ceil() as usize)
}

/// Reconstruct `J(τ)` on `n_tau` uniform samples of `[0, 1]`.
pub fn current_trace<T: Real>(env: &Envelope<T>, eps: EpsilonParams<T>, n_tau: usize) -> Result<CurrentTrace<T>> {
    if eps.is_non_relativistic() {
        return domain("current reconstruction needs epsilon > 0");
    }
    if n_tau < 2 {
        return domain(format!("n_tau must be >= 2, got {n_tau}"));
    }
    let norm = env.norm_sqr();
    if (norm - T::one()).abs() > T::lit(1e-6) {
        return domain(format!("envelope is not normalized (Σ w|g|² = {norm})"));
    }
    let e = eps.epsilon();
    let e2 = e * e;
    let one = T::one();
    let two = T::lit(2.0);
    let grid = &env.grid;

    // weighted spinor amplitudes and angular frequencies per node
    let mut a_amp = Vec::with_capacity(grid.len());
    let mut b_amp = Vec::with_capacity(grid.len());
    let mut freq = Vec::with_capacity(grid.len());
    for ((&r, &w), &g) in grid.nodes().iter().zip(grid.weights()).zip(&env.values) {
        let gam = eps.gamma(r);
        let u1 = ((gam + one) / (two * gam)).sqrt();
        // sqrt(γ − 1) = ε r / sqrt(γ + 1)
        let u2 = e * r / (two * gam * (gam + one)).sqrt();
        a_amp.push(g * (w * u1));
        b_amp.push(g * (w * u2));
        freq.push(T::lit(4.0) * gam / e2);
    }

    let prefactor = T::lit(4.0) / (T::PI() * e);
    let step = one / T::from_usize_lossy(n_tau - 1);
    let mut taus = Vec::with_capacity(n_tau);
    let mut current = Vec::with_capacity(n_tau);
    for k in 0..n_tau {
        let tau = if k == n_tau - 1 { one } else { T::from_usize_lossy(k) * step };
        let mut a = Complex::new(T::zero(), T::zero());
        let mut b = Complex::new(T::zero(), T::zero());
        for i in 0..freq.len() {
            let (s, c) = (freq[i] * tau).sin_cos();
            let ph = Complex::new(c, -s);
            a += a_amp[i] * ph;
            b += b_amp[i] * ph;
        }
        taus.push(tau);
        current.push(prefactor * (a.conj() * b).re);
    }
    let mut delta = T::zero();
    for k in 1..n_tau {
        delta += (taus[k] - taus[k - 1]) * (current[k] + current[k - 1]) / two;
    }
    Ok(CurrentTrace {
        eps,
        taus,
        current,
        delta,
    })
}

/// `vᵀMv / vᵀv` with `v = sqrt(w) ∘ η`.
pub fn rayleigh_quotient<T: Real>(eta: &[T], matrix: &KernelMatrix<T>) -> Result<T> {
    if eta.len() != matrix.dim() {
        return domain("vector length does not match the matrix");
    }
    let v = matrix.to_symmetric(eta);
    let vv = crate::linalg::dot(&v, &v);
    if !(vv > T::zero()) || !vv.is_finite() {
        return domain("Rayleigh quotient of a zero or non-finite vector");
    }
    Ok(matrix.matrix().quadratic_form(&v) / vv)
}
