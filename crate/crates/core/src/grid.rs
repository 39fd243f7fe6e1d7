//! Uniform trapezoidal momentum grids and the `h`-refinement schedule.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Descriptor of a refinement-level grid: `n0 · h` nodes on `[0, q0 · sqrt(h)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub q0: T,
    pub n0: usize,
    pub h: usize,
}

impl<T: Real> GridSpec<T> {
    pub fn upper_limit(&self) -> T {
        self.q0 * T::from_usize_lossy(self.h).sqrt()
    }

    pub fn node_count(&self) -> usize {
        self.n0 * self.h
    }

    pub fn build(&self) -> Result<QuadGrid<T>> {
        build_grid(self.q0, self.n0, self.h)
    }
}

/// Momentum grid with trapezoidal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadGrid<T> {
    spec: GridSpec<T>,
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> QuadGrid<T> {
    /// Grid from explicit nodes and weights (nodes non-negative and strictly
    /// increasing, weights positive).
    pub fn custom(nodes: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return domain("custom grid needs matching, non-empty nodes and weights");
        }
        if nodes[0] < T::zero() || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return domain("custom grid nodes must be >= 0 and strictly increasing");
        }
        if weights.iter().any(|&w| !(w > T::zero())) {
            return domain("custom grid weights must be positive");
        }
        let spec = GridSpec {
            q0: *nodes.last().unwrap(),
            n0: nodes.len(),
            h: 1,
        };
        Ok(Self { spec, nodes, weights })
    }

    pub fn spec(&self) -> GridSpec<T> {
        self.spec
    }

    pub fn q0(&self) -> T {
        self.spec.q0
    }

    pub fn n0(&self) -> usize {
        self.spec.n0
    }

    pub fn h(&self) -> usize {
        self.spec.h
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn upper_limit(&self) -> T {
        *self.nodes.last().unwrap()
    }

    /// Weighted sum `Σ wᵢ fᵢ`.
    pub fn integrate(&self, samples: &[T]) -> T {
        debug_assert_eq!(samples.len(), self.len());
        self.weights
            .iter()
            .zip(samples)
            .fold(T::zero(), |acc, (&w, &f)| acc + w * f)
    }

    /// Weighted L² norm `sqrt(Σ wᵢ fᵢ²)`.
    pub fn l2_norm(&self, samples: &[T]) -> T {
        debug_assert_eq!(samples.len(), self.len());
        self.weights
            .iter()
            .zip(samples)
            .fold(T::zero(), |acc, (&w, &f)| acc + w * f * f)
            .sqrt()
    }

    /// Linear interpolation of `values` (sampled on this grid) at `x`.
    /// Zero beyond the last node.
    pub fn interpolate_at(&self, values: &[T], x: T) -> T {
        let nodes = &self.nodes;
        if x <= nodes[0] {
            return values[0];
        }
        let last = nodes.len() - 1;
        if x > nodes[last] {
            return T::zero();
        }
        let idx = nodes.partition_point(|&n| n <= x).min(last).max(1);
        let (x0, x1) = (nodes[idx - 1], nodes[idx]);
        let t = (x - x0) / (x1 - x0);
        values[idx - 1] + t * (values[idx] - values[idx - 1])
    }

    /// Resample `values` onto `target` by linear interpolation.
    pub fn resample(&self, values: &[T], target: &QuadGrid<T>) -> Vec<T> {
        target
            .nodes
            .iter()
            .map(|&x| self.interpolate_at(values, x))
            .collect()
    }
}

/// Uniform grid of `n0 · h` nodes on `[0, q0 · sqrt(h)]` with trapezoidal weights.
///
/// Raising `h` extends the range by `sqrt(h)` and the node count by `h`, so
/// the range and the node density grow together.
pub fn build_grid<T: Real>(q0: T, n0: usize, h: usize) -> Result<QuadGrid<T>> {
    if !(q0.is_finite() && q0 > T::zero()) {
        return domain(format!("q0 must be positive, got {q0}"));
    }
    if n0 < 2 {
        return domain(format!("n0 must be >= 2, got {n0}"));
    }
    if h < 1 {
        return domain("refinement level h must be >= 1");
    }
    let spec = GridSpec { q0, n0, h };
    let n = spec.node_count();
    let upper = spec.upper_limit();
    let step = upper / T::from_usize_lossy(n - 1);
    let mut nodes: Vec<T> = (0..n).map(|i| T::from_usize_lossy(i) * step).collect();
    nodes[n - 1] = upper;
    let half = step / T::lit(2.0);
    let weights = (0..n)
        .map(|i| if i == 0 || i == n - 1 { half } else { step })
        .collect();
    Ok(QuadGrid { spec, nodes, weights })
}
