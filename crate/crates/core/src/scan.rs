//! ε sweeps: converged eigenvalues against the closed-form fit, optionally
//! alongside the six trial-fit backflows.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::eigen::{solve_converged, solve_on_grid, SolverConfig};
use crate::error::{domain, Result};
use crate::fit::{match_eigenvector, maximize_backflow, Family, FitConfig};
use crate::grid::GridSpec;
use crate::kernel::assemble;
use crate::params::EpsilonParams;
use crate::scalar::Real;

/// Amplitude of the closed-form fit (the non-relativistic backflow constant).
pub const C_BF: f64 = 0.038_451_7;
/// Fine-structure constant.
pub const ALPHA: f64 = 0.007_297_352_569_3;

/// `c_bf · exp[−(4ε/9)(1 − 4αε)]`, a positive magnitude.
pub fn closed_form_flux<T: Real>(eps: EpsilonParams<T>) -> T {
    let e = eps.epsilon();
    let four = T::lit(4.0);
    T::lit(C_BF) * (-(four * e / T::lit(9.0)) * (T::one() - four * T::lit(ALPHA) * e)).exp()
}

/// Default sweep `0.1, 0.2, …, 2.5`.
pub fn default_eps_list() -> Vec<f64> {
    (1..=25).map(|k| k as f64 / 10.0).collect()
}

/// Backflow of each fit variant; `None` where the family was not requested
/// or the fit failed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDeltas<T> {
    pub airy_max: Option<T>,
    pub airy_match: Option<T>,
    pub airy_match_a6: Option<T>,
    pub bessel_max: Option<T>,
    pub bessel_match: Option<T>,
    pub bessel_match_a6: Option<T>,
}

impl<T: Copy> FitDeltas<T> {
    pub fn cells(&self) -> [Option<T>; 6] {
        [
            self.airy_max,
            self.airy_match,
            self.airy_match_a6,
            self.bessel_max,
            self.bessel_match,
            self.bessel_match_a6,
        ]
    }

    fn family_mut(&mut self, family: Family) -> [&mut Option<T>; 3] {
        match family {
            Family::Airy => [&mut self.airy_max, &mut self.airy_match, &mut self.airy_match_a6],
            Family::Bessel => [&mut self.bessel_max, &mut self.bessel_match, &mut self.bessel_match_a6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow<T> {
    pub epsilon: T,
    /// Most negative eigenvalue (continuum estimate); NaN when the solve failed.
    pub lambda: T,
    /// Closed-form magnitude.
    pub model: T,
    /// `|(|λ| − model)/model|`.
    pub rel_err: T,
    pub fit_deltas: Option<FitDeltas<T>>,
    /// Failures met while producing this row.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl<T: Real> ScanRow<T> {
    fn new(eps: EpsilonParams<T>, lambda: Option<T>) -> Self {
        let model = closed_form_flux(eps);
        let lambda = lambda.unwrap_or_else(T::nan);
        Self {
            epsilon: eps.epsilon(),
            lambda,
            model,
            rel_err: ((lambda.abs() - model) / model).abs(),
            fit_deltas: None,
            errors: Vec::new(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

fn checked_eps<T: Real>(eps_list: &[T]) -> Result<Vec<EpsilonParams<T>>> {
    if eps_list.is_empty() {
        return domain("epsilon list is empty");
    }
    eps_list
        .iter()
        .map(|&e| {
            if !(e > T::zero()) {
                return domain(format!("scan epsilon must be > 0, got {e}"));
            }
            EpsilonParams::new(e)
        })
        .collect()
}

fn solve_row<T: Real>(eps: EpsilonParams<T>, cfg: &SolverConfig<T>) -> ScanRow<T> {
    match solve_converged(eps, cfg) {
        Ok(sol) => ScanRow::new(eps, Some(sol.lambda_limit)),
        Err(e) => {
            let mut row = ScanRow::new(eps, None);
            row.errors.push(format!("eigen: {e}"));
            row
        }
    }
}

/// One row per ε, in input order. A failed solve leaves NaN in the row and
/// the sweep continues.
pub fn eigen_scan<T: Real>(eps_list: &[T], cfg: &SolverConfig<T>) -> Result<Vec<ScanRow<T>>> {
    Ok(checked_eps(eps_list)?.into_iter().map(|e| solve_row(e, cfg)).collect())
}

/// [`eigen_scan`] plus, for every requested family, the maximized, matched and
/// `a₆`-constrained matched backflows on `fit_grid`. The same seed is used at
/// every ε.
pub fn fit_scan<T: Real>(
    eps_list: &[T],
    families: &[Family],
    solver: &SolverConfig<T>,
    fit_grid: &GridSpec<T>,
    fit: &FitConfig<T>,
) -> Result<Vec<ScanRow<T>>> {
    if families.is_empty() {
        return domain("no trial family requested");
    }
    let grid = fit_grid.build()?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for eps in checked_eps(eps_list)? {
        let mut row = solve_row(eps, solver);
        let mut deltas = FitDeltas::default();
        let km = assemble(eps, &grid);
        match solve_on_grid(eps, &grid, solver.eig_tol, solver.method) {
            Err(e) => row.errors.push(format!("fit-grid eigen: {e}")),
            Ok(sol) => {
                let free = FitConfig { a6_fixed: false, ..*fit };
                let fixed = FitConfig { a6_fixed: true, ..*fit };
                for &family in families {
                    let results = [
                        maximize_backflow(family, &km, &free),
                        match_eigenvector(family, &sol, &km, &free),
                        match_eigenvector(family, &sol, &km, &fixed),
                    ];
                    for (slot, (res, tag)) in deltas
                        .family_mut(family)
                        .into_iter()
                        .zip(results.into_iter().zip(["max", "match", "match_a6"]))
                    {
                        match res {
                            Ok(r) => *slot = Some(r.delta),
                            Err(e) => row.errors.push(format!("{family}_{tag}: {e}")),
                        }
                    }
                }
            }
        }
        row.fit_deltas = Some(deltas);
        rows.push(row);
    }
    Ok(rows)
}

pub const CSV_HEADER: &str = "epsilon,lambda,model,rel_err";
pub const CSV_FIT_HEADER: &str = "airy_max,airy_match,airy_match_a6,bessel_max,bessel_match,bessel_match_a6";

fn cell<T: Real>(v: T) -> String {
    format!("{v:.16e}")
}

/// CSV with 17 significant digits. Fit columns appear when `with_fits`;
/// cells for families not requested (or failed fits) are left empty.
pub fn write_scan_csv<T: Real, W: Write>(rows: &[ScanRow<T>], with_fits: bool, mut out: W) -> io::Result<()> {
    if with_fits {
        writeln!(out, "{CSV_HEADER},{CSV_FIT_HEADER}")?;
    } else {
        writeln!(out, "{CSV_HEADER}")?;
    }
    for row in rows {
        let mut line = [row.epsilon, row.lambda, row.model, row.rel_err].map(cell).join(",");
        if with_fits {
            let cells = row.fit_deltas.unwrap_or_default().cells();
            for c in cells {
                line.push(',');
                if let Some(v) = c {
                    line.push_str(&cell(v));
                }
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn eps(e: f64) -> EpsilonParams<f64> {
        EpsilonParams::new(e).unwrap()
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(closed_form_flux(EpsilonParams::<f64>::non_relativistic()), C_BF);
        assert!((closed_form_flux(eps(1.0)) - 0.02498).abs() < 1e-4);
        assert!((closed_form_flux(eps(2.0)) - 0.01665).abs() < 1e-4);
        // evaluated independently at 30 digits
        assert_relative_eq!(closed_form_flux(eps(1.0)), 0.024_976_403_896_531_75, max_relative = 1e-13);
    }

    #[test]
    fn default_list_is_the_figure_range() {
        let l = default_eps_list();
        assert_eq!(l.len(), 25);
        assert_eq!(l[0], 0.1);
        assert_eq!(l[24], 2.5);
    }

    #[test]
    fn empty_and_invalid_lists_are_rejected() {
        let cfg = SolverConfig::<f64>::default();
        assert!(eigen_scan(&[], &cfg).is_err());
        assert!(eigen_scan(&[0.0], &cfg).is_err());
        assert!(eigen_scan(&[-1.0], &cfg).is_err());
    }

    #[test]
    fn failed_row_is_recorded_and_scan_continues() {
        let cfg = SolverConfig::<f64> {
            q0: 3.0,
            n0: 30,
            h_max: 2,
            h_min: 2,
            refine_tol: 1e-14,
            ..SolverConfig::default()
        };
        let rows = eigen_scan(&[1.0, 2.0], &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        for r in &rows {
            assert!(!r.is_ok());
            assert!(r.lambda.is_nan());
        }
    }

    #[test]
    fn csv_layout() {
        let mut row = ScanRow::new(eps(1.0), Some(-0.025));
        let mut buf = Vec::new();
        write_scan_csv(std::slice::from_ref(&row), false, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "epsilon,lambda,model,rel_err");
        assert_eq!(lines[1].split(',').count(), 4);
        assert!(lines[1].starts_with("1.0000000000000000e0,-2.5000000000000001e-2,"));

        row.fit_deltas = Some(FitDeltas { bessel_max: Some(-0.02), ..Default::default() });
        let mut buf = Vec::new();
        write_scan_csv(&[row], true, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0].split(',').count(), 10);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), 10);
        assert_eq!(cells[4], "");
        assert_eq!(cells[7], "-2.0000000000000000e-2");
    }

    proptest! {
        #[test]
        fn model_is_decreasing(a in 0.0f64..2.5, b in 0.0f64..2.5) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(closed_form_flux(eps(lo)) > closed_form_flux(eps(hi)));
        }

        #[test]
        fn rel_err_definition(e in 0.1f64..2.5, lam in -0.05f64..-0.001) {
            let row = ScanRow::new(eps(e), Some(lam));
            let m = closed_form_flux(eps(e));
            prop_assert_eq!(row.rel_err, ((lam.abs() - m) / m).abs());
        }
    }
}
