//! Extremal eigenpair of the discretized flux operator and the grid-refinement
//! protocol that drives it to convergence.

use serde::{Deserialize, Serialize};

use crate::error::{domain, BackflowError, Result};
use crate::grid::{build_grid, GridSpec, QuadGrid};
use crate::kernel::{assemble, KernelMatrix};
use crate::linalg::{axpy, dot, norm2, scale, tridiagonal_eigen, SymMatrix};
use crate::params::EpsilonParams;
use crate::scalar::Real;

/// Algorithm used for the most negative eigenpair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EigenMethod {
    /// Restarted Lanczos with full reorthogonalization.
    #[default]
    Lanczos,
    /// Power iteration on `σI − M` with `σ = 1 + ‖M‖∞`.
    ShiftedPower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions<T> {
    /// Bound on `‖M v − λ v‖∞` for the unit eigenvector.
    pub tol: T,
    /// Budget in matrix-vector products.
    pub max_iter: usize,
    pub method: EigenMethod,
    /// Krylov subspace size per Lanczos cycle.
    pub krylov_dim: usize,
}

impl<T: Real> EigenOptions<T> {
    pub fn new(tol: T, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            method: EigenMethod::Lanczos,
            krylov_dim: 64,
        }
    }

    pub fn with_method(mut self, method: EigenMethod) -> Self {
        self.method = method;
        self
    }
}

/// Unit eigenvector and eigenvalue of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair<T> {
    pub lambda: T,
    pub vector: Vec<T>,
    /// Matrix-vector products spent.
    pub iterations: usize,
    /// `‖M v − λ v‖∞`.
    pub residual: T,
}

/// Algebraically smallest eigenpair of `m`.
pub fn smallest_eig<T: Real>(m: &SymMatrix<T>, tol: T, max_iter: usize) -> Result<EigenPair<T>> {
    smallest_eig_with(m, &EigenOptions::new(tol, max_iter), None)
}

/// [`smallest_eig`] with explicit options and an optional start vector.
pub fn smallest_eig_with<T: Real>(
    m: &SymMatrix<T>,
    opts: &EigenOptions<T>,
    start: Option<&[T]>,
) -> Result<EigenPair<T>> {
    let n = m.dim();
    if n == 0 {
        return domain("empty matrix");
    }
    if !(opts.tol > T::zero()) {
        return domain("eigensolver tolerance must be positive");
    }
    let mut x = match start {
        Some(s) if s.len() == n && norm2(s) > T::zero() && s.iter().all(|v| v.is_finite()) => {
            s.to_vec()
        }
        Some(s) if s.len() != n => return domain("start vector has the wrong length"),
        _ => default_start(n),
    };
    let nrm = norm2(&x);
    scale(T::one() / nrm, &mut x);
    if n == 1 {
        let lambda = m.get(0, 0);
        return Ok(EigenPair {
            lambda,
            vector: vec![T::one()],
            iterations: 1,
            residual: T::zero(),
        });
    }
    match opts.method {
        EigenMethod::Lanczos => lanczos(m, opts, x),
        EigenMethod::ShiftedPower => shifted_power(m, opts, x),
    }
}

/// Deterministic start vector with no special symmetry.
fn default_start<T: Real>(n: usize) -> Vec<T> {
    (0..n)
        .map(|i| T::lit(1.0 + 0.5 * (1.7 * i as f64 + 0.3).sin()))
        .collect()
}

fn residual_of<T: Real>(mx: &[T], x: &[T], lambda: T) -> T {
    mx.iter()
        .zip(x)
        .fold(T::zero(), |acc, (&a, &b)| acc.max((a - lambda * b).abs()))
}

fn shifted_power<T: Real>(m: &SymMatrix<T>, opts: &EigenOptions<T>, mut x: Vec<T>) -> Result<EigenPair<T>> {
    let n = m.dim();
    // 1 + ‖M‖∞ bounds the spectrum from above, so σI − M is positive definite
    // and its dominant eigenvector is the one of λ_min
    let norm_inf_rows = (0..n)
        .map(|i| m.row(i).iter().fold(T::zero(), |a, v| a + v.abs()))
        .fold(T::zero(), T::max);
    let sigma = T::one() + norm_inf_rows;
    let mut mx = vec![T::zero(); n];
    let mut best = (T::nan(), T::infinity());
    for it in 1..=opts.max_iter {
        m.mul_vec_into(&x, &mut mx);
        let lambda = dot(&x, &mx);
        let res = residual_of(&mx, &x, lambda);
        best = (lambda, res);
        if res <= opts.tol {
            return Ok(EigenPair {
                lambda,
                vector: x,
                iterations: it,
                residual: res,
            });
        }
        for (xi, &mi) in x.iter_mut().zip(&mx) {
            *xi = sigma * *xi - mi;
        }
        let nrm = norm2(&x);
        scale(T::one() / nrm, &mut x);
    }
    Err(BackflowError::NoConvergence {
        lambda: best.0.to_f64_lossy(),
        residual: best.1.to_f64_lossy(),
        iterations: opts.max_iter,
    })
}

fn lanczos<T: Real>(m: &SymMatrix<T>, opts: &EigenOptions<T>, mut x: Vec<T>) -> Result<EigenPair<T>> {
    let n = m.dim();
    let kdim = opts.krylov_dim.clamp(2, n);
    let mut matvecs = 0usize;
    let mut mx = vec![T::zero(); n];
    let mut best;
    let scale_est = m.gershgorin_upper().abs().max(T::one());

    loop {
        let mut basis: Vec<Vec<T>> = Vec::with_capacity(kdim);
        let mut alpha: Vec<T> = Vec::with_capacity(kdim);
        let mut beta: Vec<T> = Vec::with_capacity(kdim);
        basis.push(x.clone());
        let mut w = vec![T::zero(); n];
        for j in 0..kdim {
            m.mul_vec_into(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w);
            alpha.push(a);
            // two passes of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    axpy(-c, q, &mut w);
                }
            }
            let b = norm2(&w);
            if j + 1 == kdim || b <= T::lit(1e-13) * scale_est || matvecs >= opts.max_iter {
                break;
            }
            beta.push(b);
            let mut q = w.clone();
            scale(T::one() / b, &mut q);
            basis.push(q);
        }
        let k = alpha.len();
        let (_, vecs) = tridiagonal_eigen(&alpha, &beta[..k - 1]);
        let mut ritz = vec![T::zero(); n];
        for (row, q) in basis.iter().enumerate().take(k) {
            axpy(vecs[row * k], q, &mut ritz);
        }
        let nrm = norm2(&ritz);
        scale(T::one() / nrm, &mut ritz);
        m.mul_vec_into(&ritz, &mut mx);
        matvecs += 1;
        let lambda = dot(&ritz, &mx);
        let res = residual_of(&mx, &ritz, lambda);
        best = (lambda, res);
        if res <= opts.tol {
            return Ok(EigenPair {
                lambda,
                vector: ritz,
                iterations: matvecs,
                residual: res,
            });
        }
        if matvecs >= opts.max_iter {
            break;
        }
        x = ritz;
    }
    Err(BackflowError::NoConvergence {
        lambda: best.0.to_f64_lossy(),
        residual: best.1.to_f64_lossy(),
        iterations: matvecs,
    })
}

/// Settings for the refinement protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct SolverConfig<T> {
    /// Base upper integration limit.
    pub q0: T,
    /// Base node count.
    pub n0: usize,
    /// Eigenvector residual bound, in grid-sample coordinates.
    pub eig_tol: T,
    /// Stop when successive continuum estimates differ by less than this.
    pub refine_tol: T,
    /// Never stop before this level.
    pub h_min: usize,
    pub h_max: usize,
    /// Matrix-vector product budget per level.
    pub max_iter: usize,
    pub method: EigenMethod,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            q0: T::lit(6.0),
            n0: 200,
            eig_tol: T::lit(1e-8),
            refine_tol: T::lit(5e-5),
            h_min: 8,
            h_max: 16,
            max_iter: 20_000,
            method: EigenMethod::Lanczos,
        }
    }
}

/// Outcome of one refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel<T> {
    pub h: usize,
    pub upper_limit: T,
    pub nodes: usize,
    pub lambda: T,
    /// Continuum estimate from the levels up to and including this one.
    pub limit_estimate: Option<T>,
    pub iterations: usize,
}

/// Converged extremal eigenpair of the flux operator.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution<T> {
    pub eps: EpsilonParams<T>,
    /// Most negative eigenvalue of the final grid's matrix.
    pub lambda: T,
    /// Continuum-limit estimate from the refinement sequence.
    pub lambda_limit: T,
    /// `η(r_i)`, normalized to `Σ w_i η_i² = 1`, largest component positive.
    pub eta: Vec<T>,
    pub grid: QuadGrid<T>,
    pub h_final: usize,
    /// Total matrix-vector products over all levels.
    pub iterations: usize,
    /// `max_i |(K W η)_i − λ η_i|` on the final grid.
    pub residual: T,
    pub levels: Vec<RefinementLevel<T>>,
}

impl<T: Real> EigenSolution<T> {
    pub fn nodes(&self) -> &[T] {
        self.grid.nodes()
    }

    /// Most negative eigenvalue, continuum-extrapolated (the maximal backflow is its magnitude).
    pub fn backflow(&self) -> T {
        -self.lambda_limit
    }
}

/// Least-squares fit of `λ_h = λ_∞ + a / L_h` over the most recent half of
/// the levels (at least three). The truncation error of the momentum range
/// decays like `1/L`, which dominates the discretization error on these grids.
pub fn extrapolate_limit<T: Real>(levels: &[(T, T)]) -> Option<T> {
    let k = levels.len();
    if k < 3 {
        return None;
    }
    let take = 3.max(k.div_ceil(2));
    let window = &levels[k - take..];
    let cnt = T::from_usize_lossy(window.len());
    let (mut sx, mut sy, mut sxx, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &(upper, lambda) in window {
        let x = upper.recip();
        sx += x;
        sy += lambda;
        sxx += x * x;
        sxy += x * lambda;
    }
    let det = cnt * sxx - sx * sx;
    if det.abs() <= T::epsilon() * cnt * sxx {
        return Some(sy / cnt);
    }
    Some((sxx * sy - sx * sxy) / det)
}

fn argmax_abs<T: Real>(v: &[T]) -> usize {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    idx
}

fn sample_residual<T: Real>(km: &KernelMatrix<T>, v: &[T], lambda: T) -> T {
    let mv = km.matrix().mul_vec(v);
    mv.iter()
        .zip(v)
        .zip(km.sqrt_weights())
        .fold(T::zero(), |acc, ((&a, &b), &s)| acc.max(((a - lambda * b) / s).abs()))
}

struct LevelSolve<T> {
    lambda: T,
    eta: Vec<T>,
    iterations: usize,
    residual: T,
}

fn solve_level<T: Real>(
    km: &KernelMatrix<T>,
    eig_tol: T,
    max_iter: usize,
    method: EigenMethod,
    start_eta: Option<&[T]>,
) -> Result<LevelSolve<T>> {
    let grid = km.grid();
    let start: Vec<T> = match start_eta {
        Some(eta) => km.to_symmetric(eta),
        None => {
            let decay: Vec<T> = grid.nodes().iter().map(|&r| (-r).exp()).collect();
            km.to_symmetric(&decay)
        }
    };
    let min_sqrt_w = km.sqrt_weights().iter().copied().fold(T::infinity(), T::min);
    let opts = EigenOptions::new(eig_tol * min_sqrt_w, max_iter).with_method(method);
    let pair = smallest_eig_with(km.matrix(), &opts, Some(&start))?;
    let mut v = pair.vector;
    let mut eta = km.from_symmetric(&v);
    if eta[argmax_abs(&eta)] < T::zero() {
        for (e, x) in eta.iter_mut().zip(v.iter_mut()) {
            *e = -*e;
            *x = -*x;
        }
    }
    let residual = sample_residual(km, &v, pair.lambda);
    Ok(LevelSolve {
        lambda: pair.lambda,
        eta,
        iterations: pair.iterations,
        residual,
    })
}

/// Single-grid solve, without refinement; `lambda_limit` equals `lambda`.
pub fn solve_on_grid<T: Real>(
    eps: EpsilonParams<T>,
    grid: &QuadGrid<T>,
    eig_tol: T,
    method: EigenMethod,
) -> Result<EigenSolution<T>> {
    let km = assemble(eps, grid);
    let lvl = solve_level(&km, eig_tol, 20_000, method, None)?;
    Ok(EigenSolution {
        eps,
        lambda: lvl.lambda,
        lambda_limit: lvl.lambda,
        eta: lvl.eta,
        grid: grid.clone(),
        h_final: grid.h(),
        iterations: lvl.iterations,
        residual: lvl.residual,
        levels: vec![RefinementLevel {
            h: grid.h(),
            upper_limit: grid.upper_limit(),
            nodes: grid.len(),
            lambda: lvl.lambda,
            limit_estimate: None,
            iterations: lvl.iterations,
        }],
    })
}

/// Solve on grids `h = 1, 2, …` (range `q0 sqrt(h)`, `n0 h` points), seeding
/// each level with the previous eigenvector, until the continuum estimate
/// settles within `refine_tol`.
pub fn solve_converged<T: Real>(eps: EpsilonParams<T>, cfg: &SolverConfig<T>) -> Result<EigenSolution<T>> {
    if !(cfg.eig_tol > T::zero() && cfg.refine_tol > T::zero()) {
        return domain("tolerances must be positive");
    }
    if cfg.h_max < 1 {
        return domain("h_max must be >= 1");
    }
    let mut levels: Vec<RefinementLevel<T>> = Vec::new();
    let mut history: Vec<(T, T)> = Vec::new();
    let mut prev: Option<(QuadGrid<T>, Vec<T>)> = None;
    let mut total_iters = 0usize;

    for h in 1..=cfg.h_max {
        let grid = build_grid(cfg.q0, cfg.n0, h)?;
        let km = assemble(eps, &grid);
        let seed = prev.as_ref().map(|(g, eta)| g.resample(eta, &grid));
        let lvl = solve_level(&km, cfg.eig_tol, cfg.max_iter, cfg.method, seed.as_deref())?;
        total_iters += lvl.iterations;
        history.push((grid.upper_limit(), lvl.lambda));
        let estimate = extrapolate_limit(&history);
        let prev_estimate = levels.last().and_then(|l| l.limit_estimate);
        levels.push(RefinementLevel {
            h,
            upper_limit: grid.upper_limit(),
            nodes: grid.len(),
            lambda: lvl.lambda,
            limit_estimate: estimate,
            iterations: lvl.iterations,
        });
        if let (Some(cur), Some(before)) = (estimate, prev_estimate) {
            if h >= cfg.h_min && (cur - before).abs() < cfg.refine_tol {
                return Ok(EigenSolution {
                    eps,
                    lambda: lvl.lambda,
                    lambda_limit: cur,
                    eta: lvl.eta,
                    grid,
                    h_final: h,
                    iterations: total_iters,
                    residual: lvl.residual,
                    levels,
                });
            }
        }
        prev = Some((grid, lvl.eta));
    }
    Err(BackflowError::RefinementExhausted {
        h_max: cfg.h_max,
        sequence: levels.iter().map(|l| l.lambda.to_f64_lossy()).collect(),
    })
}

/// The refinement protocol on the `ε → 0` kernel.
pub fn solve_nonrel<T: Real>(cfg: &SolverConfig<T>) -> Result<EigenSolution<T>> {
    solve_converged(EpsilonParams::non_relativistic(), cfg)
}

#[derive(Serialize, Deserialize)]
struct SolutionRecord<T> {
    epsilon: T,
    lambda: T,
    lambda_limit: T,
    h_final: usize,
    iterations: usize,
    residual: T,
    grid: GridSpec<T>,
    levels: Vec<RefinementLevel<T>>,
    eta: Vec<T>,
    nodes: Vec<T>,
}

impl<T: Real + Serialize> Serialize for EigenSolution<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SolutionRecord {
            epsilon: self.eps.epsilon(),
            lambda: self.lambda,
            lambda_limit: self.lambda_limit,
            h_final: self.h_final,
            iterations: self.iterations,
            residual: self.residual,
            grid: self.grid.spec(),
            levels: self.levels.clone(),
            eta: self.eta.clone(),
            nodes: self.grid.nodes().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for EigenSolution<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let rec = SolutionRecord::<T>::deserialize(d)?;
        let eps = EpsilonParams::new(rec.epsilon).map_err(D::Error::custom)?;
        let grid = rec.grid.build().map_err(D::Error::custom)?;
        if grid.nodes() != rec.nodes.as_slice() || rec.eta.len() != grid.len() {
            return Err(D::Error::custom("nodes/eta inconsistent with grid descriptor"));
        }
        Ok(EigenSolution {
            eps,
            lambda: rec.lambda,
            lambda_limit: rec.lambda_limit,
            eta: rec.eta,
            grid,
            h_final: rec.h_final,
            iterations: rec.iterations,
            residual: rec.residual,
            levels: rec.levels,
        })
    }
}
