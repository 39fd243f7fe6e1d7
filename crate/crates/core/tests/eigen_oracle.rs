//! The production solver against a dense symmetric eigendecomposition, and
//! the variational bound on random vectors.

use backflow::eigen::{smallest_eig_with, EigenMethod, EigenOptions};
use backflow::{assemble, build_grid, rayleigh_quotient, solve_on_grid, EpsilonParams, Kernel};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense_min(km: &Kernel) -> f64 {
    let n = km.dim();
    let m = DMatrix::from_fn(n, n, |i, j| km.matrix().get(i, j));
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn dense_max(km: &Kernel) -> f64 {
    let n = km.dim();
    let m = DMatrix::from_fn(n, n, |i, j| km.matrix().get(i, j));
    m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn lanczos_and_power_match_dense_oracle() {
    let cases = [(0.0, 3.0, 40), (0.3, 6.0, 150), (1.0, 6.0, 200), (2.5, 8.5, 400), (1.0, 12.0, 400)];
    for (e, q0, n) in cases {
        let eps = EpsilonParams::new(e).unwrap();
        let km = assemble(eps, &build_grid(q0, n, 1).unwrap());
        let want = dense_min(&km);
        for method in [EigenMethod::Lanczos, EigenMethod::ShiftedPower] {
            let opts = EigenOptions::new(1e-10, 200_000).with_method(method);
            let got = smallest_eig_with(km.matrix(), &opts, None).unwrap();
            assert!((got.lambda - want).abs() <= 1e-8, "{method:?} eps {e} n {n}: {} vs {want}", got.lambda);
        }
    }
}

#[test]
fn spectrum_is_bounded_above_by_one() {
    for e in [0.0, 0.5, 2.0] {
        let km = assemble(EpsilonParams::new(e).unwrap(), &build_grid(8.0, 300, 1).unwrap());
        let top = dense_max(&km);
        assert!(top <= 1.0 + 1e-6 && top > 0.9, "eps {e}: top {top}");
    }
}

#[test]
fn random_vectors_respect_variational_bound() {
    let grid = build_grid(6.0, 200, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for e in [0.5, 1.0, 2.0] {
        let eps = EpsilonParams::new(e).unwrap();
        let km = assemble(eps, &grid);
        let sol = solve_on_grid(eps, &grid, 1e-10, EigenMethod::Lanczos).unwrap();
        for _ in 0..1000 {
            let v: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!(rayleigh_quotient(&v, &km).unwrap() >= sol.lambda - 1e-12);
        }
        assert!((rayleigh_quotient(&sol.eta, &km).unwrap() - sol.lambda).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rayleigh_quotient_never_below_lambda(
        e in 0.2f64..2.5,
        v in prop::collection::vec(-1.0f64..1.0, 60),
    ) {
        prop_assume!(v.iter().any(|x| x.abs() > 1e-3));
        let grid = build_grid(4.0, 60, 1).unwrap();
        let eps = EpsilonParams::new(e).unwrap();
        let km = assemble(eps, &grid);
        let sol = solve_on_grid(eps, &grid, 1e-10, EigenMethod::Lanczos).unwrap();
        prop_assert!(rayleigh_quotient(&v, &km).unwrap() >= sol.lambda - 1e-12);
    }
}
