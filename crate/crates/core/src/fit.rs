//! Airy and Bessel trial wavefunctions and the two ways of fitting them:
//! maximizing the backflow they produce, or matching the numerical
//! eigenvector by least squares.
//!
//! A trial is
//!
//! ```text
//! f(u) = F(x) / (a₄ u + a₅)^{a₆},   x = a₁ (u + a₂)^{a₃},   F ∈ {Ai, J₀}
//! ```
//!
//! in the momentum variable `u = 2p/(mc) = 2εr`. Parameters live in the box
//! `−10 ≤ a₁ ≤ 0`, `0 ≤ a_j ≤ 10` (`a₅ ≥ 1e-6` keeps the denominator positive).

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigen::EigenSolution;
use crate::error::{domain, BackflowError, Result};
use crate::kernel::KernelMatrix;
use crate::linalg::dot;
use crate::optimize::{lex_cmp, nelder_mead, Bounds, NelderMeadOptions};
use crate::params::EpsilonParams;
use crate::scalar::Real;
use crate::special::{airy_ai, bessel_j0};

/// `a₆` under the constrained fits.
pub const A6_CONSTRAINED: f64 = 2.0 / 3.0;
/// Smallest admissible `a₅`.
pub const A5_MIN: f64 = 1e-6;
/// Bessel optimum near ε = 0.9 (≈99% of the maximal backflow).
pub const BESSEL_REFERENCE_EPS_0_9: [f64; 6] = [-1.347, 0.603, 0.986, 0.341, 0.435, 0.715];
/// Bessel optimum at ε = 1.0 used for the current-density comparison.
pub const BESSEL_REFERENCE_EPS_1_0: [f64; 6] = [-1.176, 0.763, 0.971, 0.332, 0.445, 0.751];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Airy,
    Bessel,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Airy => "airy",
            Family::Bessel => "bessel",
        })
    }
}

impl FromStr for Family {
    type Err = BackflowError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "airy" => Ok(Family::Airy),
            "bessel" => Ok(Family::Bessel),
            other => domain(format!("unknown trial family '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// Most negative Rayleigh quotient.
    Maximize,
    /// Least-squares match to the numerical eigenvector.
    Match,
}

impl fmt::Display for FitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMode::Maximize => "maximize",
            FitMode::Match => "match",
        })
    }
}

impl FromStr for FitMode {
    type Err = BackflowError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maximize" | "max" => Ok(FitMode::Maximize),
            "match" => Ok(FitMode::Match),
            other => domain(format!("unknown fit mode '{other}'")),
        }
    }
}

/// Trial family and coefficients `a₁ … a₆`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialParams<T> {
    pub family: Family,
    pub a: [T; 6],
    pub a6_fixed: bool,
}

impl<T: Real> TrialParams<T> {
    pub fn new(family: Family, a: [T; 6], a6_fixed: bool) -> Result<Self> {
        let p = Self { family, a, a6_fixed };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.a;
        if a.iter().any(|v| !v.is_finite()) {
            return domain("trial coefficients must be finite");
        }
        let ten = T::lit(10.0);
        if a[0] < -ten || a[0] > T::zero() {
            return domain(format!("a1 = {} outside [-10, 0]", a[0]));
        }
        for (j, &v) in a.iter().enumerate().skip(1) {
            if v < T::zero() || v > ten {
                return domain(format!("a{} = {v} outside [0, 10]", j + 1));
            }
        }
        if a[4] < T::lit(A5_MIN) {
            return domain(format!("a5 = {} below {A5_MIN}", a[4]));
        }
        if self.a6_fixed && a[5] != T::lit(A6_CONSTRAINED) {
            return domain("a6 must equal 2/3 when constrained");
        }
        Ok(())
    }
}

/// Box of admissible coefficients; five-dimensional when `a₆` is fixed.
pub fn parameter_bounds<T: Real>(a6_fixed: bool) -> Bounds<T> {
    let mut lower = vec![T::lit(-10.0), T::zero(), T::zero(), T::zero(), T::lit(A5_MIN), T::zero()];
    let mut upper = vec![T::zero(), T::lit(10.0), T::lit(10.0), T::lit(10.0), T::lit(10.0), T::lit(10.0)];
    if a6_fixed {
        lower.pop();
        upper.pop();
    }
    Bounds::new(lower, upper)
}

#[inline]
fn eval_unchecked<T: Real>(family: Family, a: &[T; 6], u: T) -> T {
    let x = a[0] * (u + a[1]).powf(a[2]);
    let f = match family {
        Family::Airy => airy_ai(x),
        Family::Bessel => bessel_j0(x),
    }
    .unwrap_or_else(|_| T::nan());
    f / (a[3] * u + a[4]).powf(a[5])
}

/// `F(x) / (a₄ u + a₅)^{a₆}` at momentum `u ≥ 0`.
pub fn trial_eval<T: Real>(p: &TrialParams<T>, u: T) -> Result<T> {
    p.validate()?;
    if !(u >= T::zero()) {
        return domain(format!("trial momentum must be >= 0, got {u}"));
    }
    Ok(eval_unchecked(p.family, &p.a, u))
}

/// Trial momentum `u = 2εr` at grid momentum `r`.
#[inline]
pub fn trial_momentum<T: Real>(r: T, eps: EpsilonParams<T>) -> T {
    T::lit(2.0) * eps.epsilon() * r
}

fn normalized_samples<T: Real>(family: Family, a: &[T; 6], matrix: &KernelMatrix<T>) -> Option<Vec<T>> {
    let eps = matrix.eps();
    let grid = matrix.grid();
    let mut s: Vec<T> = grid
        .nodes()
        .iter()
        .map(|&r| eval_unchecked(family, a, trial_momentum(r, eps)))
        .collect();
    let norm = grid.l2_norm(&s);
    if !norm.is_finite() || norm < T::lit(1e-12) {
        return None;
    }
    let inv = norm.recip();
    for v in s.iter_mut() {
        *v *= inv;
    }
    Some(s)
}

fn rayleigh_of_unit<T: Real>(samples: &[T], matrix: &KernelMatrix<T>) -> T {
    let v = matrix.to_symmetric(samples);
    matrix.matrix().quadratic_form(&v) / dot(&v, &v)
}

/// Trial samples on the grid, normalized to `Σ w_i f_i² = 1`.
pub fn trial_samples<T: Real>(p: &TrialParams<T>, matrix: &KernelMatrix<T>) -> Result<Vec<T>> {
    p.validate()?;
    if matrix.eps().is_non_relativistic() {
        return domain("trial functions are defined for epsilon > 0");
    }
    normalized_samples(p.family, &p.a, matrix).ok_or_else(|| {
        BackflowError::Domain("trial vanishes (or overflows) on the grid".into())
    })
}

/// Backflow `Δ` of the normalized trial: its Rayleigh quotient on `matrix`.
pub fn backflow_of_trial<T: Real>(p: &TrialParams<T>, matrix: &KernelMatrix<T>) -> Result<T> {
    let s = trial_samples(p, matrix)?;
    Ok(rayleigh_of_unit(&s, matrix))
}

/// Search settings shared by both fit modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig<T> {
    pub restarts: usize,
    pub seed: u64,
    pub a6_fixed: bool,
    /// Objective evaluations per restart.
    pub max_evals: usize,
    pub ftol: T,
    /// Quadrature-weighted residual (default) or plain mean over nodes.
    pub weighted_residual: bool,
    /// Start the first restarts from the committed reference vectors.
    pub warm_start: bool,
    /// Keep the per-restart record in the result.
    pub keep_trace: bool,
}

impl<T: Real> Default for FitConfig<T> {
    fn default() -> Self {
        Self {
            restarts: 5000,
            seed: 0,
            a6_fixed: false,
            max_evals: 2000,
            ftol: T::lit(1e-8),
            weighted_residual: true,
            warm_start: false,
            keep_trace: false,
        }
    }
}

impl<T: Real> FitConfig<T> {
    /// Reduced restart budget for quick runs.
    pub fn fast() -> Self {
        Self {
            restarts: 200,
            ..Self::default()
        }
    }
}

/// One local search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord<T> {
    pub index: usize,
    pub objective: T,
    pub delta: T,
    pub evals: usize,
    /// Best objective over restarts `0..=index`.
    pub best_objective: T,
    /// Backflow of the best point over restarts `0..=index`.
    pub best_delta: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<T> {
    pub mode: FitMode,
    pub epsilon: T,
    pub params: TrialParams<T>,
    /// Rayleigh-quotient backflow of the normalized best trial.
    pub delta: T,
    /// Residual against the target eigenvector (match mode only).
    pub residual: Option<T>,
    /// Lowest objective found (`delta` or `residual`).
    pub objective: T,
    pub restarts_used: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<RestartRecord<T>>>,
}

fn full_params<T: Real>(x: &[T], a6_fixed: bool) -> [T; 6] {
    let mut a = [T::zero(); 6];
    a[..x.len()].copy_from_slice(x);
    if a6_fixed {
        a[5] = T::lit(A6_CONSTRAINED);
    }
    a
}

fn restart_point<T: Real>(bounds: &Bounds<T>, seed: u64, index: usize) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    bounds
        .lower
        .iter()
        .zip(&bounds.upper)
        .map(|(&lo, &hi)| {
            let t: f64 = rng.gen();
            lo + (hi - lo) * T::lit(t)
        })
        .collect()
}

fn reference_starts<T: Real>(family: Family, a6_fixed: bool) -> Vec<Vec<T>> {
    if family != Family::Bessel {
        return Vec::new();
    }
    [BESSEL_REFERENCE_EPS_0_9, BESSEL_REFERENCE_EPS_1_0]
        .iter()
        .map(|v| {
            let dim = if a6_fixed { 5 } else { 6 };
            v[..dim].iter().map(|&x| T::lit(x)).collect()
        })
        .collect()
}

fn run_restarts<T: Real>(
    mode: FitMode,
    family: Family,
    matrix: &KernelMatrix<T>,
    cfg: &FitConfig<T>,
    objective: impl Fn(&[T; 6]) -> T,
) -> Result<FitResult<T>> {
    if cfg.restarts < 1 {
        return domain("at least one restart is required");
    }
    if matrix.eps().is_non_relativistic() {
        return domain("trial fits are defined for epsilon > 0");
    }
    let bounds = parameter_bounds::<T>(cfg.a6_fixed);
    let nm = NelderMeadOptions {
        max_evals: cfg.max_evals,
        ftol: cfg.ftol,
        step_fraction: T::lit(0.1),
    };
    let warm = if cfg.warm_start {
        reference_starts(family, cfg.a6_fixed)
    } else {
        Vec::new()
    };

    let mut best: Option<(T, [T; 6])> = None;
    let mut best_delta = T::nan();
    let mut trace = Vec::with_capacity(if cfg.keep_trace { cfg.restarts } else { 0 });
    let mut degenerate = 0usize;

    for index in 0..cfg.restarts {
        let x0 = match warm.get(index) {
            Some(w) => w.clone(),
            None => restart_point(&bounds, cfg.seed, index),
        };
        let m = nelder_mead(
            |x: &[T]| objective(&full_params(x, cfg.a6_fixed)),
            &x0,
            &bounds,
            &nm,
        );
        let a = full_params(&m.x, cfg.a6_fixed);
        if !m.f.is_finite() {
            degenerate += 1;
        } else {
            let better = match &best {
                None => true,
                Some((bf, ba)) => m.f < *bf || (m.f == *bf && lex_cmp(&a, ba) == std::cmp::Ordering::Less),
            };
            if better {
                best = Some((m.f, a));
                best_delta = normalized_samples(family, &a, matrix)
                    .map(|s| rayleigh_of_unit(&s, matrix))
                    .unwrap_or_else(T::nan);
            }
        }
        if cfg.keep_trace {
            let delta = normalized_samples(family, &a, matrix)
                .map(|s| rayleigh_of_unit(&s, matrix))
                .unwrap_or_else(T::nan);
            trace.push(RestartRecord {
                index,
                objective: m.f,
                delta,
                evals: m.evals,
                best_objective: best.map(|b| b.0).unwrap_or_else(T::infinity),
                best_delta,
            });
        }
    }

    let (objective_value, a) = best.ok_or_else(|| BackflowError::DegenerateFit {
        restarts: cfg.restarts,
        detail: format!("{degenerate} restarts ended on a vanishing or non-finite trial"),
    })?;
    let params = TrialParams {
        family,
        a,
        a6_fixed: cfg.a6_fixed,
    };
    Ok(FitResult {
        mode,
        epsilon: matrix.eps().epsilon(),
        params,
        delta: best_delta,
        residual: match mode {
            FitMode::Maximize => None,
            FitMode::Match => Some(objective_value),
        },
        objective: objective_value,
        restarts_used: cfg.restarts,
        seed: cfg.seed,
        trace: cfg.keep_trace.then_some(trace),
    })
}

/// Random-restart search for the trial with the most negative backflow.
pub fn maximize_backflow<T: Real>(family: Family, matrix: &KernelMatrix<T>, cfg: &FitConfig<T>) -> Result<FitResult<T>> {
    run_restarts(FitMode::Maximize, family, matrix, cfg, |a| {
        match normalized_samples(family, a, matrix) {
            Some(s) => rayleigh_of_unit(&s, matrix),
            None => T::infinity(),
        }
    })
}

/// Residual between a normalized trial `t` and target `η`, after choosing the
/// sign of `t` that minimizes it.
pub fn aligned_residual<T: Real>(trial: &[T], target: &[T], weights: &[T], weighted: bool) -> T {
    let (mut plus, mut minus, mut total) = (T::zero(), T::zero(), T::zero());
    for ((&t, &e), &w) in trial.iter().zip(target).zip(weights) {
        let w = if weighted { w } else { T::one() };
        plus += w * (t - e) * (t - e);
        minus += w * (t + e) * (t + e);
        total += w;
    }
    plus.min(minus) / total
}

/// Least-squares match of the family to arbitrary target samples on the
/// matrix grid. The target should be normalized like an eigenvector.
pub fn match_samples<T: Real>(
    family: Family,
    target: &[T],
    matrix: &KernelMatrix<T>,
    cfg: &FitConfig<T>,
) -> Result<FitResult<T>> {
    if target.len() != matrix.dim() {
        return domain("target length does not match the grid");
    }
    let weights = matrix.grid().weights();
    run_restarts(FitMode::Match, family, matrix, cfg, |a| {
        match normalized_samples(family, a, matrix) {
            Some(s) => aligned_residual(&s, target, weights, cfg.weighted_residual),
            None => T::infinity(),
        }
    })
}

/// Least-squares match of the family to the solution's eigenvector; `matrix`
/// must be assembled on the solution's grid.
pub fn match_eigenvector<T: Real>(
    family: Family,
    sol: &EigenSolution<T>,
    matrix: &KernelMatrix<T>,
    cfg: &FitConfig<T>,
) -> Result<FitResult<T>> {
    if matrix.grid() != &sol.grid || matrix.eps() != sol.eps {
        return domain("matrix and eigen-solution were built on different grids or epsilon");
    }
    match_samples(family, &sol.eta, matrix, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::kernel::assemble;
    use approx::assert_relative_eq;

    fn eps(e: f64) -> EpsilonParams<f64> {
        EpsilonParams::new(e).unwrap()
    }

    #[test]
    fn bessel_constant_trial() {
        let p = TrialParams::new(Family::Bessel, [0.0, 3.0, 2.0, 0.0, 1.0, 4.0], false).unwrap();
        for &u in &[0.0, 0.5, 7.0] {
            assert_eq!(trial_eval(&p, u).unwrap(), 1.0);
        }
    }

    #[test]
    fn airy_trial_vanishes_at_first_zero() {
        let p = TrialParams::new(Family::Airy, [-1.0, 0.0, 1.0, 0.0, 1.0, 0.0], false).unwrap();
        assert!(trial_eval(&p, 2.338_107_410_459_767f64).unwrap().abs() < 1e-6);
    }

    #[test]
    fn reference_vector_decays_and_oscillates() {
        let p = TrialParams::new(Family::Bessel, BESSEL_REFERENCE_EPS_0_9, false).unwrap();
        let vals: Vec<f64> = (0..=1000).map(|i| trial_eval(&p, i as f64 * 0.01).unwrap()).collect();
        assert!(vals.iter().all(|v| v.is_finite()));
        let changes = vals.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
        assert!(changes >= 3);
        let head = vals[..200].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tail = vals[800..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(tail < head);
    }

    #[test]
    fn box_is_enforced() {
        assert!(TrialParams::new(Family::Airy, [0.5, 0.0, 1.0, 0.0, 1.0, 0.0], false).is_err());
        assert!(TrialParams::new(Family::Airy, [-1.0, 11.0, 1.0, 0.0, 1.0, 0.0], false).is_err());
        assert!(TrialParams::new(Family::Airy, [-1.0, 1.0, 1.0, 0.0, 0.0, 0.0], false).is_err());
        assert!(TrialParams::new(Family::Airy, [-1.0, 1.0, 1.0, 0.0, 1.0, 0.5], true).is_err());
        assert!(TrialParams::new(Family::Airy, [-1.0, 1.0, 1.0, 0.0, 1.0, 2.0 / 3.0], true).is_ok());
        let p = TrialParams { family: Family::Bessel, a: [1.0, 0.0, 1.0, 0.0, 1.0, 0.0], a6_fixed: false };
        assert!(trial_eval(&p, 1.0).is_err());
    }

    #[test]
    fn parse_family_and_mode() {
        assert_eq!("Bessel".parse::<Family>().unwrap(), Family::Bessel);
        assert_eq!("airy".parse::<Family>().unwrap(), Family::Airy);
        assert!("fresnel".parse::<Family>().is_err());
        assert_eq!("maximize".parse::<FitMode>().unwrap(), FitMode::Maximize);
    }

    #[test]
    fn aligned_residual_chooses_sign() {
        let w = [1.0, 1.0];
        assert_eq!(aligned_residual(&[1.0, 0.0], &[-1.0, 0.0], &w, true), 0.0);
        assert_relative_eq!(aligned_residual(&[1.0, 0.0], &[0.0, 1.0], &w, true), 1.0);
    }

    #[test]
    fn trial_backflow_is_variationally_bounded() {
        let grid = build_grid(12.0, 120, 1).unwrap();
        let km = assemble(eps(1.0), &grid);
        let sol = crate::eigen::solve_on_grid(eps(1.0), &grid, 1e-10, crate::eigen::EigenMethod::Lanczos).unwrap();
        for a in [BESSEL_REFERENCE_EPS_0_9, BESSEL_REFERENCE_EPS_1_0, [-5.0, 2.0, 0.5, 1.0, 1.0, 1.0]] {
            for fam in [Family::Airy, Family::Bessel] {
                let p = TrialParams::new(fam, a, false).unwrap();
                let d = backflow_of_trial(&p, &km).unwrap();
                assert!(d >= sol.lambda - 1e-12);
            }
        }
    }

    #[test]
    fn zero_trial_is_rejected() {
        let grid = build_grid(3.0, 10, 1).unwrap();
        let km = assemble(eps(1.0), &grid);
        // Ai(−10·(u+10)^10) underflows nowhere, but a huge denominator does
        let p = TrialParams::new(Family::Bessel, [0.0, 0.0, 0.0, 10.0, 10.0, 10.0], false).unwrap();
        let s = backflow_of_trial(&p, &km);
        assert!(s.is_ok() || matches!(s, Err(BackflowError::Domain(_))));
        let p = TrialParams::new(Family::Airy, [0.0, 0.0, 0.0, 0.0, 1.0, 0.0], false).unwrap();
        assert!(backflow_of_trial(&p, &assemble(EpsilonParams::non_relativistic(), &grid)).is_err());
    }

    #[test]
    fn restart_points_are_stream_separated_and_in_box() {
        let b = parameter_bounds::<f64>(false);
        let p0 = restart_point(&b, 7, 0);
        let p1 = restart_point(&b, 7, 1);
        assert_ne!(p0, p1);
        assert_eq!(p0, restart_point(&b, 7, 0));
        assert!(b.contains(&p0) && b.contains(&p1));
    }
}
