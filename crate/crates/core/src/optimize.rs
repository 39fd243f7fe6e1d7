//! Box-constrained Nelder–Mead simplex search.
//!
//! Candidate points are clamped into the box before evaluation. When the
//! simplex collapses while budget remains, it is rebuilt around the best
//! vertex; the search stops once a rebuild no longer improves the objective.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> Bounds<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn clamp(&self, x: &mut [T]) {
        for ((v, &lo), &hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.max(lo).min(hi);
        }
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((v, lo), hi)| v >= lo && v <= hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions<T> {
    /// Objective evaluations allowed in total.
    pub max_evals: usize,
    /// Relative spread of vertex values at which a simplex is converged.
    pub ftol: T,
    /// Initial edge length as a fraction of each box width.
    pub step_fraction: T,
}

impl<T: Real> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            ftol: T::lit(1e-8),
            step_fraction: T::lit(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub f: T,
    pub evals: usize,
    pub converged: bool,
}

struct Counted<'a, T, F> {
    f: F,
    bounds: &'a Bounds<T>,
    evals: usize,
}

impl<T: Real, F: FnMut(&[T]) -> T> Counted<'_, T, F> {
    fn eval(&mut self, x: &mut [T]) -> T {
        self.bounds.clamp(x);
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            T::infinity()
        } else {
            v
        }
    }
}

/// Minimize `f` over the box from `x0`.
pub fn nelder_mead<T: Real, F: FnMut(&[T]) -> T>(
    f: F,
    x0: &[T],
    bounds: &Bounds<T>,
    opts: &NelderMeadOptions<T>,
) -> Minimum<T> {
    let n = x0.len();
    assert_eq!(n, bounds.dim());
    let mut obj = Counted { f, bounds, evals: 0 };
    let mut best_x = x0.to_vec();
    let mut best_f = obj.eval(&mut best_x);
    let mut step_fraction = opts.step_fraction;
    let mut converged = false;

    while obj.evals < opts.max_evals {
        let (x, fx, conv) = simplex_run(&mut obj, &best_x, best_f, step_fraction, opts);
        let improved = fx < best_f - opts.ftol * best_f.abs().max(T::lit(1e-300));
        if fx <= best_f {
            best_x = x;
            best_f = fx;
        }
        converged = conv;
        if !conv || !improved {
            break;
        }
        step_fraction = step_fraction * T::lit(0.5);
    }
    Minimum {
        x: best_x,
        f: best_f,
        evals: obj.evals,
        converged,
    }
}

fn simplex_run<T: Real, F: FnMut(&[T]) -> T>(
    obj: &mut Counted<'_, T, F>,
    x0: &[T],
    f0: T,
    step_fraction: T,
    opts: &NelderMeadOptions<T>,
) -> (Vec<T>, T, bool) {
    let n = x0.len();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut pts: Vec<Vec<T>> = vec![x0.to_vec()];
    let mut vals: Vec<T> = vec![f0];
    for i in 0..n {
        let width = obj.bounds.upper[i] - obj.bounds.lower[i];
        let mut step = width * step_fraction;
        if step == T::zero() {
            step = T::lit(1e-3);
        }
        let mut p = x0.to_vec();
        p[i] = if x0[i] + step <= obj.bounds.upper[i] {
            x0[i] + step
        } else {
            x0[i] - step
        };
        let v = obj.eval(&mut p);
        pts.push(p);
        vals.push(v);
    }

    loop {
        // order vertices by value, ties broken by coordinates for determinism
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| {
            vals[a]
                .partial_cmp(&vals[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| lex_cmp(&pts[a], &pts[b]))
        });
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let (fb, fw) = (vals[0], vals[n]);
        let spread = (fw - fb).abs();
        let scale = (fb.abs() + fw.abs()) * half;
        if fw.is_finite() && spread <= opts.ftol * scale + T::lit(1e-300) {
            return (pts[0].clone(), vals[0], true);
        }
        if obj.evals >= opts.max_evals {
            return (pts[0].clone(), vals[0], false);
        }

        let mut centroid = vec![T::zero(); n];
        for p in &pts[..n] {
            for (c, &v) in centroid.iter_mut().zip(p) {
                *c += v;
            }
        }
        let inv = T::one() / T::from_usize_lossy(n);
        for c in centroid.iter_mut() {
            *c *= inv;
        }
        let along = |t: T| -> Vec<T> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let mut xr = along(T::one());
        let fr = obj.eval(&mut xr);
        if fr < vals[0] {
            let mut xe = along(two);
            let fe = obj.eval(&mut xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (mut xc, fc) = if fr < vals[n] {
            let mut xc = along(half);
            let fc = obj.eval(&mut xc);
            (xc, fc)
        } else {
            let mut xc = along(-half);
            let fc = obj.eval(&mut xc);
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = std::mem::take(&mut xc);
            vals[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let mut p: Vec<T> = pts[0]
                .iter()
                .zip(&pts[i])
                .map(|(&b, &x)| b + half * (x - b))
                .collect();
            vals[i] = obj.eval(&mut p);
            pts[i] = p;
        }
    }
}

pub(crate) fn lex_cmp<T: Real>(a: &[T], b: &[T]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    std::cmp::Ordering::Equal
}
