//! Dimensionless relativity parameter and the γ-factor.
//!
//! Momenta are measured in units of `sqrt(4 m ħ / T)`, so that `p = m c ε r`
//! and `E(p) = γ(r) m c²` with `γ(r) = sqrt(1 + ε² r²)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Reduced Planck constant in J·s (exact SI value).
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Speed of light in m/s (exact SI value).
pub const C_SI: f64 = 299_792_458.0;
/// Electron rest mass in kg (CODATA 2018).
pub const ELECTRON_MASS_SI: f64 = 9.109_383_701_5e-31;

/// The relativity parameter `ε = sqrt(4ħ / (m c² T))`.
///
/// `ε = 0` is admitted and selects the non-relativistic kernel.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EpsilonParams<T> {
    epsilon: T,
}

impl<T: Real> EpsilonParams<T> {
    pub fn new(epsilon: T) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < T::zero() {
            return domain(format!("epsilon must be finite and >= 0, got {epsilon}"));
        }
        Ok(Self { epsilon })
    }

    /// The `ε → 0` limit.
    pub fn non_relativistic() -> Self {
        Self { epsilon: T::zero() }
    }

    #[inline]
    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    #[inline]
    pub fn is_non_relativistic(&self) -> bool {
        self.epsilon == T::zero()
    }

    /// `γ(r)` for this ε.
    #[inline]
    pub fn gamma(&self, r: T) -> T {
        gamma(r, *self)
    }
}

/// `γ(r) = sqrt(1 + ε² r²)`; exactly 1 when `ε = 0` or `r = 0`.
#[inline]
pub fn gamma<T: Real>(r: T, eps: EpsilonParams<T>) -> T {
    T::one().hypot(eps.epsilon * r)
}

/// `ε = sqrt(4ħ / (m c² T))` from physical quantities in any consistent unit system.
pub fn epsilon_from_physical<T: Real>(mass: T, period: T, hbar: T, c: T) -> Result<EpsilonParams<T>> {
    for (name, v) in [("mass", mass), ("period", period), ("hbar", hbar), ("c", c)] {
        if !(v.is_finite() && v > T::zero()) {
            return domain(format!("{name} must be strictly positive, got {v}"));
        }
    }
    // 4ħ/(mc²T) evaluated as a product of ratios to stay inside f32/f64 range
    let ratio = (T::lit(4.0) * hbar / mass) / (c * c) / period;
    EpsilonParams::new(ratio.sqrt())
}
