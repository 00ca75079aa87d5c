mod common;

use common::*;
use nonlinear_levy::generator::SampledFunction;
use nonlinear_levy::levy::{Interval, JumpFamily, TripletFamily, Truncation};
use nonlinear_levy::solver::{solve, step_explicit, GridSpec, SolverOptions, ValueSurface};
use nonlinear_levy::Error;

fn family(b: Interval, c: Interval, jumps: JumpFamily, h: Truncation) -> TripletFamily {
    TripletFamily::new(b, c, jumps, h).unwrap()
}

#[test]
fn transport_moves_the_profile() {
    let theta = family(Interval::point(1.0), Interval::point(0.0), JumpFamily::NoJumps, Truncation::Canonical);
    let psi = SampledFunction::analytic(|x: f64| (2.0 * x).tanh(), 1.0, 2.0);
    let mut errors = Vec::new();
    for dx in [0.02, 0.01] {
        let grid = GridSpec::centered(&theta, 0.0, 1.0, dx, None).unwrap();
        let v = solve(&psi, &theta, &grid, &SolverOptions::default()).unwrap();
        let err = (-200..=200)
            .map(|k| k as f64 * 0.01)
            .map(|x| (v.evaluate(1.0, x).unwrap() - (2.0 * (x + 1.0)).tanh()).abs())
            .fold(0.0, f64::max);
        assert!(err < 2.0 * (dx + grid.dt), "dx={dx}: {err}");
        errors.push(err);
    }
    assert!(errors[1] < 0.7 * errors[0], "{errors:?}");
}

#[test]
fn uncertain_volatility_picks_the_largest_diffusion() {
    let theta = heat_family();
    let psi = capped_abs();
    let grid = GridSpec::centered(&theta, 0.0, 1.0, 0.05, None).unwrap();
    let v = solve(&psi, &theta, &grid, &SolverOptions::default()).unwrap();
    for x in [-1.0, -0.3, 0.0, 0.5, 1.2] {
        let err = (v.evaluate(1.0, x).unwrap() - heat_oracle(0.2, 1.0, x)).abs();
        assert!(err < 5e-3, "x={x}: {err}");
    }
}

#[test]
fn heat_refinement_converges() {
    let theta = heat_family();
    let psi = capped_abs();
    let oracle = heat_oracle(0.2, 1.0, 0.0);
    let mut grid = GridSpec::centered(&theta, 0.0, 1.0, 0.1, None).unwrap();
    let mut values = Vec::new();
    for _ in 0..3 {
        let v = solve(&psi, &theta, &grid, &SolverOptions::default()).unwrap();
        values.push(v.evaluate(1.0, 0.0).unwrap());
        grid = grid.refined(&theta, None).unwrap();
    }
    let errors: Vec<f64> = values.iter().map(|v| (v - oracle).abs()).collect();
    assert!(errors[1] * 1.5 <= errors[0] && errors[2] * 1.5 <= errors[1], "{errors:?}");
    let d1 = (values[1] - values[0]).abs();
    let d2 = (values[2] - values[1]).abs();
    assert!(d2 * 1.5 <= d1, "successive differences {d1} {d2}");
}

#[test]
fn poisson_family_matches_series() {
    let theta = poisson_family(Truncation::CanonicalOpen);
    let psi = clamp01();
    let oracle = poisson_series(1.5, 0.0, |x| x.clamp(0.0, 1.0));
    let grid = GridSpec::centered(&theta, 0.0, 1.0, 0.05, None).unwrap();
    let v = solve(&psi, &theta, &grid, &SolverOptions::default()).unwrap();
    let e0 = (v.evaluate(1.0, 0.0).unwrap() - oracle).abs();
    assert!(e0 <= 5e-3, "{e0}");
    let fine = grid.refined(&theta, None).unwrap();
    let v = solve(&psi, &theta, &fine, &SolverOptions::default()).unwrap();
    let e1 = (v.evaluate(1.0, 0.0).unwrap() - oracle).abs();
    assert!(e1 <= 1.5e-3, "{e1}");
}

#[test]
fn zero_horizon_returns_the_initial_condition() {
    let theta = stable_family(0.5, 1.0);
    let psi = SampledFunction::analytic(|x: f64| x.tanh(), 1.0, 1.0);
    let grid = GridSpec::centered(&theta, 0.0, 0.0, 0.1, None).unwrap();
    let v = solve(&psi, &theta, &grid, &SolverOptions::default()).unwrap();
    assert_eq!(v.values.len(), 1);
    for (i, x) in grid.nodes().into_iter().enumerate() {
        assert_eq!(v.values[0][i], x.tanh());
    }
}

#[test]
fn bounded_lipschitz_and_monotone() {
    let theta = stable_family(0.5, 1.0);
    let grid = GridSpec::centered(&theta, 0.0, 0.5, 0.1, None).unwrap();
    let low = SampledFunction::analytic(|x: f64| (x - 0.5).tanh(), 1.0, 1.0 - 0.5f64.tanh().powi(2));
    let high = SampledFunction::analytic(|x: f64| x.tanh(), 1.0, 1.0);
    let vl = solve(&low, &theta, &grid, &SolverOptions::default()).unwrap();
    let vh = solve(&high, &theta, &grid, &SolverOptions::default()).unwrap();
    let tol = 1e-9 * grid.nt as f64;
    assert!(vh.sup_norm() <= 1.0 + tol);
    for row in &vh.values {
        let lip = row.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max) / grid.dx();
        assert!(lip <= 1.0 * 1.02, "{lip}");
    }
    // tanh(x − 0.5) ≤ tanh(x) everywhere
    for (a, b) in vl.values.iter().flatten().zip(vh.values.iter().flatten()) {
        assert!(a <= b, "{a} > {b}");
    }
}

#[test]
fn split_radius_has_small_effect() {
    let theta = stable_family(0.5, 1.0);
    let psi = SampledFunction::analytic(|x: f64| x.tanh(), 1.0, 1.0);
    let grid = GridSpec::centered(&theta, 0.0, 0.5, 0.05, Some(0.2)).unwrap();
    let a = solve(&psi, &theta, &grid, &SolverOptions { kappa: Some(0.2), ..Default::default() }).unwrap();
    let b = solve(&psi, &theta, &grid, &SolverOptions { kappa: Some(0.1), ..Default::default() }).unwrap();
    let gap = (a.evaluate(0.5, 0.3).unwrap() - b.evaluate(0.5, 0.3).unwrap()).abs();
    // the surrogate error is of order 𝒦_κ T
    let k_kappa = 2.0 * 0.2f64.powf(0.5) / 0.5;
    assert!(gap <= k_kappa * 0.5, "{gap}");
}

#[test]
fn step_rejects_large_steps() {
    let theta = heat_family();
    let grid = GridSpec::centered(&theta, 0.0, 1.0, 0.05, None).unwrap();
    assert!(matches!(grid.clone().with_dt(&theta, 1.0, None), Err(Error::CflViolation { .. })));
    let slice = vec![f64::NAN; grid.nx];
    assert!(matches!(step_explicit(&slice, &theta, &grid, None), Err(Error::NonFiniteValue { node: 0, .. })));
}

#[test]
fn evaluate_interpolates_and_guards_the_horizon() {
    let theta = family(Interval::point(0.0), Interval::point(0.0), JumpFamily::NoJumps, Truncation::Canonical);
    let psi = SampledFunction::analytic(|x: f64| 0.5 * x, 100.0, 0.5);
    let grid = GridSpec::new(&theta, -2.0, 2.0, 41, 1.0, None).unwrap();
    let v = solve(&psi, &theta, &grid, &SolverOptions::default()).unwrap();
    assert_eq!(v.evaluate(0.5, grid.x(7)).unwrap(), v.values[0][7]);
    assert!((v.evaluate(0.3, 0.05).unwrap() - 0.025).abs() < 1e-15);
    assert_eq!(v.evaluate(1.0, 10.0).unwrap(), 1.0);
    assert!(matches!(v.evaluate(1.5, 0.0), Err(Error::OutOfHorizon { .. })));
}

#[test]
fn surface_csv_round_trip() {
    let theta = poisson_family(Truncation::CanonicalOpen);
    let grid = GridSpec::centered(&theta, 0.0, 0.5, 0.25, None).unwrap();
    let v = solve(&clamp01(), &theta, &grid, &SolverOptions { kappa: None, record_stride: 7 }).unwrap();
    let mut buf = Vec::new();
    v.write_csv(&mut buf).unwrap();
    let back = ValueSurface::read_csv(&buf[..]).unwrap();
    assert_eq!(back.values, v.values);
    assert_eq!(back.times, v.times);
    assert_eq!(back.grid, v.grid);
    assert_eq!(back.theta_fingerprint, v.theta_fingerprint);
    let mut again = Vec::new();
    back.write_csv(&mut again).unwrap();
    assert_eq!(buf, again);
}
