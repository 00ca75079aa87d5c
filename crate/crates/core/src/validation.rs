//! Executable checks tying the generator, solver and simulator together.
//!
//! Every check returns a [`CheckReport`] whose `pass` flag is exactly
//! `discrepancy ≤ tolerance`.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{g_eval, g_kappa_eval, GeneratorInput, SampledFunction, DEFAULT_KAPPA};
use crate::io::digest_hex;
use crate::levy::{family_condition_report, Interval, JumpFamily, TripletFamily, Truncation, DEFAULT_EPS_LADDER};
use crate::sim::{default_policy_set, worst_case_expectation, SimConfig};
use crate::solver::{solve, GridSpec, SolverOptions, ValueSurface, DEFAULT_DX};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub inputs_fingerprint: String,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub runtime_secs: f64,
    /// Named auxiliary numbers, in insertion order.
    pub details: Vec<(String, f64)>,
}

impl CheckReport {
    fn new(name: &str, inputs: &str, discrepancy: f64, tolerance: f64, started: Instant) -> Self {
        Self {
            name: name.to_string(),
            inputs_fingerprint: digest_hex(inputs.as_bytes()),
            discrepancy,
            tolerance,
            pass: discrepancy <= tolerance,
            runtime_secs: started.elapsed().as_secs_f64(),
            details: Vec::new(),
        }
    }

    fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.push((key.to_string(), value));
        self
    }

    pub fn detail_value(&self, key: &str) -> Option<f64> {
        self.details.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Fixed-width table of reports, one line each.
pub fn format_table(reports: &[CheckReport]) -> String {
    let mut s = format!("{:<28} {:>12} {:>12} {:>6} {:>9}\n", "check", "discrepancy", "tolerance", "pass", "seconds");
    for r in reports {
        let _ = writeln!(
            s,
            "{:<28} {:>12.4e} {:>12.4e} {:>6} {:>9.2}",
            r.name,
            r.discrepancy,
            r.tolerance,
            if r.pass { "yes" } else { "NO" },
            r.runtime_secs
        );
    }
    s
}

/// Monte Carlo settings for the semigroup check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupConfig {
    /// Earlier time `u` at which the continuation value is read (`0 < u < t`).
    pub u: f64,
    pub x_points: Vec<f64>,
    pub n_paths: usize,
    pub m_intervals: usize,
    pub sim: SimConfig,
    pub seed: u64,
    /// Allowance for the discretization error of the surface.
    pub scheme_tol: f64,
    /// Require two-sided agreement of the best policy; otherwise only `MC ≤ PIDE`.
    pub expect_equality: bool,
}

/// Compares `v(t, x)` with the Monte Carlo value of `y ↦ v(t − u, y)` after time `u`,
/// with `t` the horizon of `surface`.
pub fn check_semigroup(theta: &TripletFamily, surface: &ValueSurface, cfg: &SemigroupConfig) -> Result<CheckReport> {
    let started = Instant::now();
    let t = surface.horizon();
    let u = cfg.u;
    if !(u > 0.0 && u < t) {
        return Err(Error::OutOfHorizon { t: u, horizon: t });
    }
    let shared = Arc::new(surface.clone());
    let level = t - u;
    let bound = surface.sup_norm();
    let phi = {
        let s = shared.clone();
        SampledFunction::analytic(move |y| s.evaluate(level, y).expect("level inside horizon"), bound, 0.0)
    };
    let policies = default_policy_set(theta, cfg.m_intervals, u, Some(surface))?;
    let mut worst = (f64::NEG_INFINITY, 0.0, 0.0);
    let mut max_gap = 0.0f64;
    let mut max_se = 0.0f64;
    for &x in &cfg.x_points {
        let a = surface.evaluate(t, x)?;
        let (best, all) = worst_case_expectation(theta, &phi, &policies, x, cfg.n_paths, &cfg.sim, cfg.seed)?;
        max_se = max_se.max(best.std_error);
        let mut candidates: Vec<(f64, f64)> =
            all.iter().map(|e| (e.mean - a, cfg.scheme_tol + 3.0 * e.std_error)).collect();
        if cfg.expect_equality {
            candidates.push(((a - best.mean).abs(), cfg.scheme_tol + 3.0 * best.std_error));
        }
        for (gap, allowed) in candidates {
            max_gap = max_gap.max(gap.abs());
            if gap - allowed > worst.0 - worst.2 || worst.0 == f64::NEG_INFINITY {
                worst = (gap, gap, allowed);
            }
        }
    }
    let inputs = format!("semigroup|{}|{}|{:?}", surface.theta_fingerprint, surface.psi_fingerprint, cfg);
    Ok(CheckReport::new("semigroup", &inputs, worst.1, worst.2, started)
        .detail("t", t)
        .detail("u", u)
        .detail("max_abs_gap", max_gap)
        .detail("max_std_error", max_se)
        .detail("policies", policies.len() as f64))
}

/// Grid settings for solver-level checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dx: f64,
    pub kappa: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { dx: DEFAULT_DX, kappa: None }
    }
}

/// `v(T, 0)` on the default grid and on its refinement.
fn value_with_refinement(
    psi: &SampledFunction,
    theta: &TripletFamily,
    horizon: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    let opts = SolverOptions { kappa: cfg.kappa, record_stride: usize::MAX };
    let grid = GridSpec::centered(theta, 0.0, horizon, cfg.dx, cfg.kappa)?;
    let coarse = solve(psi, theta, &grid, &opts)?.evaluate(horizon, 0.0)?;
    let fine_grid = grid.refined(theta, cfg.kappa)?;
    let fine = solve(psi, theta, &fine_grid, &opts)?.evaluate(horizon, 0.0)?;
    Ok((coarse, fine))
}

fn scaling_family(alpha: f64, k_plus: Interval, k_minus: Interval) -> Result<TripletFamily> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::ConditionViolation(format!("the scaling identity needs α ∈ (1, 2), got {alpha}")));
    }
    TripletFamily::new(
        Interval::point(0.0),
        Interval::point(0.0),
        JumpFamily::StableCoefficients { alpha, k_plus, k_minus },
        Truncation::Identity,
    )
}

/// Target for the scaling discrepancy at the default resolution.
pub const SCALING_TARGET: f64 = 1e-2;

/// Solves for `ψ` up to `λ t` and for `ψ(λ^{1/α} ·)` up to `t` and compares the
/// values at `x = 0` against twice the summed refinement estimates.
pub fn check_scaling(
    alpha: f64,
    k_ranges: (Interval, Interval),
    psi: &SampledFunction,
    lambda: f64,
    t: f64,
    cfg: &SolverConfig,
) -> Result<CheckReport> {
    let started = Instant::now();
    let theta = scaling_family(alpha, k_ranges.0, k_ranges.1)?;
    if !(lambda > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter("λ and t must be positive".into()));
    }
    let (v, v_fine) = value_with_refinement(psi, &theta, lambda * t, cfg)?;
    let (w, w_fine) = if lambda == 1.0 {
        (v, v_fine)
    } else {
        value_with_refinement(&psi.dilated(lambda.powf(1.0 / alpha)), &theta, t, cfg)?
    };
    let (e1, e2) = ((v - v_fine).abs(), (w - w_fine).abs());
    let inputs = format!("scaling|{}|{lambda}|{t}|{:?}|{}", theta.fingerprint(), cfg, psi.value_at_zero());
    Ok(CheckReport::new("scaling", &inputs, (v - w).abs(), 2.0 * (e1 + e2), started)
        .detail("v_lambda_t", v)
        .detail("v_scaled_t", w)
        .detail("refinement_lambda_t", e1)
        .detail("refinement_scaled_t", e2)
        .detail("fine_discrepancy", (v_fine - w_fine).abs())
        .detail("target", SCALING_TARGET))
}

/// `f(z) = c₀ + Σ a_j tanh(w_j z + s_j)` with exact derivatives at `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhMix {
    pub offset: f64,
    pub terms: Vec<(f64, f64, f64)>,
}

impl TanhMix {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let n = rng.random_range(1..=3);
        let terms = (0..n)
            .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(0.2..3.0), rng.random_range(-2.0..2.0)))
            .collect();
        Self { offset: rng.random_range(-1.0..1.0), terms }
    }

    pub fn function(&self) -> SampledFunction {
        let terms = self.terms.clone();
        let offset = self.offset;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        let mut m3 = 0.0;
        let mut bound = offset.abs();
        for &(a, w, s) in &terms {
            let th = s.tanh();
            let sech2 = 1.0 - th * th;
            d1 += a * w * sech2;
            d2 += a * w * w * (-2.0 * th * sech2);
            // |tanh'''| ≤ 2
            m3 += 2.0 * a.abs() * w.powi(3);
            bound += a.abs();
        }
        SampledFunction::analytic(
            move |z| offset + terms.iter().map(|&(a, w, s)| a * (w * z + s).tanh()).sum::<f64>(),
            bound,
            d1,
        )
        .with_second_derivative(d2)
        .with_third_derivative_bound(m3)
    }
}

/// Generator-level scaling: `G(p, q, f(λ^{1/α} ·)) = λ G(p, q, f)` on random smooth `f`.
///
/// The dilated side is split at `κ / λ^{1/α}`, the image of `κ` under the
/// substitution `z ↦ λ^{1/α} z`, so both sides describe the same split of the
/// same integral and the Taylor surrogate scales exactly as well. Shrinking
/// `κ` instead does not work: below about `1e-5` the cancellation in
/// `f(z) − f(0) − f'(0) z` is amplified by `z^{-α}` beyond the tolerance.
/// The reported discrepancy is the worst relative error.
pub fn check_generator_scaling(
    alpha: f64,
    k_ranges: (Interval, Interval),
    lambda: f64,
    n_cases: usize,
    seed: u64,
) -> Result<CheckReport> {
    let started = Instant::now();
    let theta = scaling_family(alpha, k_ranges.0, k_ranges.1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa = 1e-3;
    let s = lambda.powf(1.0 / alpha);
    let mut worst = 0.0f64;
    for _ in 0..n_cases {
        let f = TanhMix::random(&mut rng).function();
        let (p, q) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let lhs = g_eval(&theta, &GeneratorInput::new(p, q, f.dilated(s)).with_kappa(kappa / s))?.value;
        let rhs = lambda * g_eval(&theta, &GeneratorInput::new(p, q, f).with_kappa(kappa))?.value;
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-300));
    }
    let inputs = format!("generator_scaling|{}|{lambda}|{n_cases}|{seed}", theta.fingerprint());
    Ok(CheckReport::new("generator_scaling", &inputs, worst, 1e-8, started).detail("cases", n_cases as f64))
}

/// Fitted `C` in `sup_x |v(t, x) − v(s, x)| ≤ C (|t − s| + |t − s|^{1/2})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeModulus {
    pub constant: f64,
    /// `(δ, sup |v(t + δ) − v(t)|, C (δ + √δ) − modulus)`.
    pub samples: Vec<(f64, f64, f64)>,
}

/// Fits the time modulus over lags that are powers of two of the stored level spacing.
pub fn fit_time_modulus(surface: &ValueSurface) -> TimeModulus {
    let levels = surface.times.len();
    let mut raw = Vec::new();
    let mut lag = 1;
    while lag < levels {
        let mut m = 0.0f64;
        let mut delta = 0.0f64;
        for n in 0..levels - lag {
            let d = surface.times[n + lag] - surface.times[n];
            let diff =
                surface.values[n + lag].iter().zip(&surface.values[n]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if diff > m {
                m = diff;
            }
            delta = delta.max(d);
        }
        raw.push((delta, m));
        lag *= 2;
    }
    let constant = raw.iter().map(|(d, m)| m / (d + d.sqrt())).fold(0.0, f64::max);
    let samples = raw.iter().map(|&(d, m)| (d, m, constant * (d + d.sqrt()) - m)).collect();
    TimeModulus { constant, samples }
}

/// Default relative allowance on the discrete Lipschitz constant.
pub const TOL_LIP: f64 = 2e-2;

/// Default additive allowance on the sup norm.
pub const TOL_SUP: f64 = 1e-6;

fn ratio(value: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        value / bound
    } else if value == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Spatial Lipschitz constant and sup norm of every level against `Lip(ψ)` and `‖ψ‖_∞`,
/// plus the fitted time modulus.
///
/// The discrepancy is the larger of the two normalized ratios; the check passes when it is at most one.
pub fn check_regularity(surface: &ValueSurface, psi_lip: f64, psi_sup: f64) -> CheckReport {
    let started = Instant::now();
    let dx = surface.grid.dx();
    let lip =
        surface.values.iter().flat_map(|row| row.windows(2).map(|w| (w[1] - w[0]).abs() / dx)).fold(0.0, f64::max);
    let sup = surface.sup_norm();
    let modulus = fit_time_modulus(surface);
    let worst = ratio(lip, psi_lip * (1.0 + TOL_LIP)).max(ratio(sup, psi_sup + TOL_SUP));
    let min_residual = modulus.samples.iter().map(|s| s.2).fold(f64::INFINITY, f64::min);
    let inputs = format!("regularity|{}|{}|{psi_lip}|{psi_sup}", surface.theta_fingerprint, surface.psi_fingerprint);
    CheckReport::new("regularity", &inputs, worst, 1.0, started)
        .detail("lipschitz", lip)
        .detail("sup_norm", sup)
        .detail("time_constant", modulus.constant)
        .detail("min_time_residual", if min_residual.is_finite() { min_residual } else { 0.0 })
}

/// Tolerance for identities that hold exactly up to rounding.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Constant in `|G(p₁,q₁,f+ψ) − G(p₂,q₂,f)| ≤ C (|Δp| + |Δq| + ‖ψ'‖ + ‖ψ''‖)`.
///
/// Drift and diffusion contribute at most `𝒦 |Δp|` and `½ 𝒦 |Δq|`. On
/// `|z| ≤ 1` the integrand is at most `½ ‖ψ''‖ z²`, and beyond it is at most
/// `2 ‖ψ'‖ |z|` for every supported truncation, so `C = 2 𝒦` suffices.
pub fn lipschitz_constant(theta: &TripletFamily) -> Result<f64> {
    Ok(2.0 * family_condition_report(theta, &DEFAULT_EPS_LADDER)?.k_total)
}

/// Randomized monotonicity, constant-invariance, consistency and Lipschitz suite for `G` and `G^κ`.
///
/// One report per property; discrepancies are worst violations.
pub fn check_generator_conditions(theta: &TripletFamily, n_cases: usize, seed: u64) -> Result<Vec<CheckReport>> {
    let lip = lipschitz_constant(theta)?;
    let kappa = DEFAULT_KAPPA;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = |p: f64, q: f64, f: SampledFunction| -> Result<f64> {
        Ok(g_eval(theta, &GeneratorInput::new(p, q, f).with_kappa(kappa))?.value)
    };
    let fp = theta.fingerprint();
    let mut out = Vec::new();

    // monotonicity: q₁ ≥ q₂ and f₁ − f₂ ≥ 0 with equality at 0
    let started = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..n_cases {
        let f2 = TanhMix::random(&mut rng).function();
        let (a, w) = (rng.random_range(0.0..2.0), rng.random_range(0.1..3.0));
        let bump = SampledFunction::analytic(move |z: f64| a * (1.0 - 1.0 / (w * z).cosh()), a, 0.0)
            .with_second_derivative(a * w * w);
        let f1 = f2.sum(&bump);
        let p = rng.random_range(-2.0..2.0);
        let q2 = rng.random_range(-2.0..2.0);
        let q1 = q2 + rng.random_range(0.0..1.0);
        let (g1, g2) = (g(p, q1, f1)?, g(p, q2, f2)?);
        worst = worst.max((g2 - g1) / (1.0 + g1.abs().max(g2.abs())));
    }
    out.push(CheckReport::new(
        "generator_monotone",
        &format!("c2|{fp}|{n_cases}|{seed}"),
        worst.max(0.0),
        IDENTITY_TOL,
        started,
    ));

    // constant invariance of G
    let started = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..n_cases {
        let f = TanhMix::random(&mut rng).function();
        let (p, q) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let c = rng.random_range(-10.0..10.0);
        let (a, b) = (g(p, q, f.clone())?, g(p, q, f.plus_constant(c))?);
        worst = worst.max((a - b).abs());
    }
    out.push(CheckReport::new(
        "generator_constant_shift",
        &format!("c3|{fp}|{n_cases}|{seed}"),
        worst,
        IDENTITY_TOL,
        started,
    ));

    // G^κ with equal arguments is G
    let started = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..n_cases {
        let f = TanhMix::random(&mut rng).function();
        let (p, q) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let a = g(p, q, f.clone())?;
        let b = g_kappa_eval(theta, p, q, &f, &f, kappa)?.value;
        worst = worst.max((a - b).abs());
    }
    out.push(CheckReport::new(
        "regularized_consistency",
        &format!("c4|{fp}|{n_cases}|{seed}"),
        worst,
        IDENTITY_TOL,
        started,
    ));

    // G^κ ignores separate constant shifts of both arguments
    let started = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..n_cases {
        let f = TanhMix::random(&mut rng).function();
        let gg = TanhMix::random(&mut rng).function();
        let (p, q) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (c1, c2) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let a = g_kappa_eval(theta, p, q, &f, &gg, kappa)?.value;
        let b = g_kappa_eval(theta, p, q, &f.plus_constant(c1), &gg.plus_constant(c2), kappa)?.value;
        worst = worst.max((a - b).abs());
    }
    out.push(CheckReport::new(
        "regularized_constant_shift",
        &format!("c6|{fp}|{n_cases}|{seed}"),
        worst,
        IDENTITY_TOL,
        started,
    ));

    // Lipschitz estimate with C = 2𝒦; the discrepancy is the worst ratio to the bound
    let started = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..n_cases {
        let f = TanhMix::random(&mut rng).function();
        let (a, w, phase): (f64, f64, f64) =
            (rng.random_range(-1.0..1.0), rng.random_range(0.1..3.0), rng.random_range(0.0..6.3));
        let psi = SampledFunction::analytic(move |z: f64| a * (w * z + phase).sin(), a.abs(), a * w * phase.cos())
            .with_second_derivative(-a * w * w * phase.sin());
        let (d1, d2) = (a.abs() * w, a.abs() * w * w);
        let (p1, p2) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let (q1, q2) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let lhs = (g(p1, q1, f.sum(&psi))? - g(p2, q2, f)?).abs();
        let rhs = lip * ((p1 - p2).abs() + (q1 - q2).abs() + d1 + d2);
        worst = worst.max(ratio(lhs, rhs));
    }
    out.push(
        CheckReport::new("generator_lipschitz", &format!("c8|{fp}|{n_cases}|{seed}"), worst, 1.0, started)
            .detail("constant", lip),
    );
    Ok(out)
}
