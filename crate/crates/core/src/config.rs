//! Run configuration shared by every CLI command. Every field has a default,
//! so a config file only needs the keys it changes.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::eigen::SolverConfig;
use crate::error::{domain, Result};
use crate::fit::{Family, FitConfig, FitMode};
use crate::grid::GridSpec;
use crate::params::EpsilonParams;
use crate::scan::default_eps_list;

/// Grid for trial fits: `[0, 24]` at spacing ≈ 0.05.
pub const FIT_GRID_Q0: f64 = 24.0;
pub const FIT_GRID_N0: usize = 480;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// ε for single-point commands (default 1.0).
    pub epsilon: f64,
    /// ε values for `scan` (default 0.1, 0.2, …, 2.5).
    pub eps_list: Vec<f64>,
    /// Refinement protocol (defaults: q0 6, n0 200, h 8..16).
    pub solver: SolverConfig<f64>,
    /// Time samples for current traces; `None` picks `max(4001, 40/ε²)`.
    pub n_tau: Option<usize>,
    /// Family for `fit` (default Bessel).
    pub family: Family,
    /// Families for `scan --with-fits` (default both).
    pub families: Vec<Family>,
    pub mode: FitMode,
    /// Restarts per fit (default 5000).
    pub restarts: usize,
    pub seed: u64,
    pub a6_fixed: bool,
    /// Fit grid, `[0, 24]` with 480 nodes by default.
    pub fit_grid: GridSpec<f64>,
    pub max_evals: usize,
    pub weighted_residual: bool,
    pub warm_start: bool,
    /// Include the per-restart record in fit output.
    pub trace: bool,
    /// Add the six fit columns to `scan`.
    pub with_fits: bool,
    /// Trial family and coefficients for `current` (eigenvector when absent).
    pub trial: Option<Family>,
    pub params: Option<[f64; 6]>,
    /// Output artifact; standard output when absent.
    pub out: Option<PathBuf>,
    /// Debug dump of the final kernel matrix for `eigen`.
    pub matrix_out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fit = FitConfig::<f64>::default();
        Self {
            epsilon: 1.0,
            eps_list: default_eps_list(),
            solver: SolverConfig::default(),
            n_tau: None,
            family: Family::Bessel,
            families: vec![Family::Airy, Family::Bessel],
            mode: FitMode::Maximize,
            restarts: fit.restarts,
            seed: fit.seed,
            a6_fixed: false,
            fit_grid: GridSpec {
                q0: FIT_GRID_Q0,
                n0: FIT_GRID_N0,
                h: 1,
            },
            max_evals: fit.max_evals,
            weighted_residual: fit.weighted_residual,
            warm_start: fit.warm_start,
            trace: false,
            with_fits: false,
            trial: None,
            params: None,
            out: None,
            matrix_out: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| crate::BackflowError::Domain(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn eps(&self) -> Result<EpsilonParams<f64>> {
        EpsilonParams::new(self.epsilon)
    }

    /// `ε > 0` for the relativistic commands.
    pub fn relativistic_eps(&self) -> Result<EpsilonParams<f64>> {
        if !(self.epsilon > 0.0) {
            return domain(format!("epsilon must be > 0, got {}", self.epsilon));
        }
        self.eps()
    }

    pub fn fit_config(&self) -> FitConfig<f64> {
        FitConfig {
            restarts: self.restarts,
            seed: self.seed,
            a6_fixed: self.a6_fixed,
            max_evals: self.max_evals,
            weighted_residual: self.weighted_residual,
            warm_start: self.warm_start,
            keep_trace: self.trace,
            ..FitConfig::default()
        }
    }

    /// Checks that do not depend on the command.
    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.n_tau {
            if n < 2 {
                return domain(format!("n_tau must be >= 2, got {n}"));
            }
        }
        if self.restarts < 1 {
            return domain("restarts must be >= 1");
        }
        if self.eps_list.is_empty() {
            return domain("epsilon list is empty");
        }
        if self.params.is_some() != self.trial.is_some() {
            return domain("trial family and params must be given together");
        }
        Ok(())
    }
}
