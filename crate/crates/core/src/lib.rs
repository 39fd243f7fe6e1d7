//! Relativistic quantum backflow: the maximal backflow eigenvalue as a function
//! of the relativity parameter ε, the probability current it produces at the
//! origin, and Airy/Bessel trial wavefunctions fitted to it.
//!
//! All routines are generic over the scalar type (`f32` or `f64`); the
//! aliases at the bottom of this file fix them to `f64`.

pub mod config;
pub mod current;
pub mod eigen;
pub mod error;
pub mod fit;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod optimize;
pub mod params;
pub mod scalar;
pub mod scan;
pub mod special;

pub use error::{BackflowError, Result};
pub use scalar::Real;

pub use current::{current_trace, envelope_from_eigvec, rayleigh_quotient, CurrentTrace, Envelope};
pub use eigen::{
    smallest_eig, smallest_eig_with, solve_converged, solve_nonrel, solve_on_grid, EigenMethod, EigenOptions,
    EigenPair, EigenSolution, SolverConfig,
};
pub use fit::{
    backflow_of_trial, match_eigenvector, maximize_backflow, trial_eval, Family, FitConfig, FitMode, FitResult,
    TrialParams,
};
pub use grid::{build_grid, GridSpec, QuadGrid};
pub use kernel::{assemble, kernel_nonrel, kernel_rel, KernelMatrix};
pub use params::{epsilon_from_physical, gamma, EpsilonParams};
pub use scan::{closed_form_flux, eigen_scan, fit_scan, write_scan_csv, FitDeltas, ScanRow};

pub use special::{airy_ai, bessel_j0};

pub type Epsilon = EpsilonParams<f64>;
pub type Grid = QuadGrid<f64>;
pub type Kernel = KernelMatrix<f64>;
pub type Solution = EigenSolution<f64>;
pub type Solver = SolverConfig<f64>;
pub type Trace = CurrentTrace<f64>;
pub type Trial = TrialParams<f64>;
pub type Fit = FitResult<f64>;
pub type Row = ScanRow<f64>;
