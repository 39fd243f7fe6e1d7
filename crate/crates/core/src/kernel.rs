//! The backflow flux kernel and its Nyström discretization.
//!
//! The flux through the origin over one backflow window is the bilinear form
//! `Δ = ∫∫ η(r) K(r, s) η(s) dr ds` of the real eigenfunction η, where
//!
//! ```text
//! K(r, s) = (1/π) · [r(γ(s)+1) + s(γ(r)+1)] / sqrt(γ(r)(γ(r)+1)γ(s)(γ(s)+1))
//!                 · sinc(2(γ(r) − γ(s)) / ε²)
//! ```
//!
//! and `ε → 0` gives `K₀(r, s) = (1/π) sin(r² − s²)/(r − s)`. The operator has
//! spectrum in `[λ_min, 1]`; the backflow maximum is its most negative
//! eigenvalue.

use std::io::{self, Write};

use crate::error::{domain, Result};
use crate::grid::QuadGrid;
use crate::linalg::SymMatrix;
use crate::params::EpsilonParams;
use crate::scalar::Real;

/// `sin(x)/x`, with a Taylor branch for `|x| < 1e-4`.
#[inline]
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

/// Relativistic kernel with precomputed `γ(r)`, `γ(s)`.
#[inline]
pub(crate) fn kernel_rel_with_gamma<T: Real>(r: T, s: T, gr: T, gs: T) -> T {
    let one = T::one();
    let num = r * (gs + one) + s * (gr + one);
    let den = (gr * (gr + one) * gs * (gs + one)).sqrt();
    // γ(r) − γ(s) = ε²(r² − s²)/(γ(r) + γ(s)), so the ε² cancels exactly
    let arg = T::lit(2.0) * (r - s) * (r + s) / (gr + gs);
    T::FRAC_1_PI() * num / den * sinc(arg)
}

/// Relativistic kernel `K(r, s)` for `ε > 0`.
pub fn kernel_rel<T: Real>(r: T, s: T, eps: EpsilonParams<T>) -> Result<T> {
    if eps.is_non_relativistic() {
        return domain("kernel_rel needs epsilon > 0; use kernel_nonrel for the limit");
    }
    if r < T::zero() || s < T::zero() {
        return domain("kernel arguments must be non-negative momenta");
    }
    Ok(kernel_rel_with_gamma(r, s, eps.gamma(r), eps.gamma(s)))
}

/// Non-relativistic kernel `(1/π) sin(r² − s²)/(r − s) = (1/π)(r + s) sinc(r² − s²)`.
#[inline]
pub fn kernel_nonrel<T: Real>(r: T, s: T) -> T {
    T::FRAC_1_PI() * (r + s) * sinc((r - s) * (r + s))
}

/// Kernel selected by ε: the non-relativistic form at exactly `ε = 0`.
pub fn kernel<T: Real>(r: T, s: T, eps: EpsilonParams<T>) -> T {
    if eps.is_non_relativistic() {
        kernel_nonrel(r, s)
    } else {
        kernel_rel_with_gamma(r, s, eps.gamma(r), eps.gamma(s))
    }
}

/// Weight-symmetrized Nyström matrix `M_ij = sqrt(w_i) K(r_i, r_j) sqrt(w_j)`.
///
/// Eigenvalues of `M` approximate those of the integral operator; an
/// eigenvector `v` of `M` maps to samples `η_i = v_i / sqrt(w_i)`.
#[derive(Debug, Clone)]
pub struct KernelMatrix<T> {
    eps: EpsilonParams<T>,
    grid: QuadGrid<T>,
    sqrt_w: Vec<T>,
    matrix: SymMatrix<T>,
}

impl<T: Real> KernelMatrix<T> {
    pub fn eps(&self) -> EpsilonParams<T> {
        self.eps
    }

    pub fn grid(&self) -> &QuadGrid<T> {
        &self.grid
    }

    pub fn matrix(&self) -> &SymMatrix<T> {
        &self.matrix
    }

    pub fn sqrt_weights(&self) -> &[T] {
        &self.sqrt_w
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Always true: entries carry the `sqrt(w_i) · sqrt(w_j)` scaling.
    pub fn symmetrized(&self) -> bool {
        true
    }

    /// Map grid samples `η_i` to symmetrized coordinates `sqrt(w_i) η_i`.
    pub fn to_symmetric(&self, eta: &[T]) -> Vec<T> {
        eta.iter().zip(&self.sqrt_w).map(|(&e, &s)| e * s).collect()
    }

    /// Inverse of [`to_symmetric`](Self::to_symmetric).
    pub fn from_symmetric(&self, v: &[T]) -> Vec<T> {
        v.iter().zip(&self.sqrt_w).map(|(&x, &s)| x / s).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        self.matrix.write_csv(out)
    }
}

/// Assemble the symmetrized kernel matrix on `grid`.
pub fn assemble<T: Real>(eps: EpsilonParams<T>, grid: &QuadGrid<T>) -> KernelMatrix<T> {
    let r = grid.nodes();
    let sqrt_w: Vec<T> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let matrix = if eps.is_non_relativistic() {
        SymMatrix::from_fn(r.len(), |i, j| {
            sqrt_w[i] * kernel_nonrel(r[i], r[j]) * sqrt_w[j]
        })
    } else {
        let g: Vec<T> = r.iter().map(|&x| eps.gamma(x)).collect();
        SymMatrix::from_fn(r.len(), |i, j| {
            sqrt_w[i] * kernel_rel_with_gamma(r[i], r[j], g[i], g[j]) * sqrt_w[j]
        })
    };
    KernelMatrix {
        eps,
        grid: grid.clone(),
        sqrt_w,
        matrix,
    }
}
