//! Explicit monotone solver for the nonlinear Kolmogorov equation
//! `∂_t v = G(∂_x v, ∂_xx v, v(t, x + ·))`, `v(0, ·) = ψ`.
//!
//! ```
//! use nonlinear_levy::levy::{Interval, JumpFamily, Truncation, TripletFamily};
//! use nonlinear_levy::generator::SampledFunction;
//! use nonlinear_levy::solver::{solve, GridSpec, SolverOptions};
//!
//! let theta = TripletFamily::new(
//!     Interval::point(1.0),
//!     Interval::point(0.0),
//!     JumpFamily::NoJumps,
//!     Truncation::Canonical,
//! )?;
//! let psi = SampledFunction::analytic(|x: f64| x.tanh(), 1.0, 1.0);
//! let grid = GridSpec::centered(&theta, 0.0, 0.5, 0.01, None)?;
//! let v = solve(&psi, &theta, &grid, &SolverOptions::default())?;
//! assert!((v.evaluate(0.5, 0.0)? - 0.5f64.tanh()).abs() < 1e-2);
//! # Ok::<(), nonlinear_levy::Error>(())
//! ```

mod scheme;
mod surface;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use scheme::ExplicitScheme;
pub use surface::{SolveDiagnostics, ValueSurface};

use crate::error::{Error, Result};
use crate::generator::SampledFunction;
use crate::io::digest_samples;
use crate::levy::{family_condition_report, TripletFamily, DEFAULT_EPS_LADDER};

/// Cap on the step as a fraction of the horizon, keeping the time error of
/// the explicit Euler update small even when the CFL bound is loose.
pub const MIN_STEPS: usize = 200;

/// Fraction of the CFL bound used by the default step.
pub const CFL_SAFETY: f64 = 0.9;

/// Spacing of the default grid.
pub const DEFAULT_DX: f64 = 0.05;

/// Uniform space-time grid. Values outside `[x_min, x_max]` are clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub horizon: f64,
    pub dt: f64,
    pub nt: usize,
}

/// Solver knobs beyond the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Small-jump split radius; `None` uses the grid spacing.
    pub kappa: Option<f64>,
    /// Keep every `record_stride`-th time level (the last one is always kept).
    pub record_stride: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { kappa: None, record_stride: 1 }
    }
}

/// `1 / (sup ĉ/Δx² + sup |b̂|/Δx + sup jump rate)` for the given spacing and split radius.
pub fn cfl_bound(theta: &TripletFamily, dx: f64, nx: usize, kappa: Option<f64>) -> Result<f64> {
    Ok(ExplicitScheme::new(theta, dx, nx, kappa.unwrap_or(dx))?.cfl_bound())
}

fn uniform_steps(horizon: f64, dt_max: f64) -> (f64, usize) {
    if horizon == 0.0 {
        return (dt_max.min(1.0), 0);
    }
    let nt = (horizon / dt_max).ceil().max(1.0) as usize;
    (horizon / nt as f64, nt)
}

impl GridSpec {
    /// Grid with the default step `min(0.9 · CFL, T / 200)`.
    pub fn new(
        theta: &TripletFamily,
        x_min: f64,
        x_max: f64,
        nx: usize,
        horizon: f64,
        kappa: Option<f64>,
    ) -> Result<Self> {
        if !(x_max > x_min) || nx < 3 {
            return Err(Error::InvalidParameter("grid needs x_max > x_min and at least three nodes".into()));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be finite and nonnegative, got {horizon}")));
        }
        let dx = (x_max - x_min) / (nx - 1) as f64;
        let cfl = cfl_bound(theta, dx, nx, kappa)?;
        let dt_max = (CFL_SAFETY * cfl).min(horizon / MIN_STEPS as f64);
        let dt_max = if dt_max > 0.0 { dt_max } else { CFL_SAFETY * cfl };
        let (dt, nt) = uniform_steps(horizon, dt_max);
        Ok(Self { x_min, x_max, nx, horizon, dt, nt })
    }

    /// Grid of spacing `dx` centered on `x_query` with half-width `10 (1 + 𝒦 T)`.
    pub fn centered(theta: &TripletFamily, x_query: f64, horizon: f64, dx: f64, kappa: Option<f64>) -> Result<Self> {
        let report = family_condition_report(theta, &DEFAULT_EPS_LADDER)?;
        let half_width = 10.0 * (1.0 + report.k_total * horizon);
        let half = (half_width / dx).ceil() as usize;
        let x_min = x_query - half as f64 * dx;
        let x_max = x_query + half as f64 * dx;
        Self::new(theta, x_min, x_max, 2 * half + 1, horizon, kappa)
    }

    /// Overrides the time step; rejects steps above the CFL bound.
    pub fn with_dt(self, theta: &TripletFamily, dt: f64, kappa: Option<f64>) -> Result<Self> {
        let bound = cfl_bound(theta, self.dx(), self.nx, kappa)?;
        if !(dt > 0.0) || dt > bound {
            return Err(Error::CflViolation { dt, bound });
        }
        let (dt, nt) = uniform_steps(self.horizon, dt);
        Ok(Self { dt, nt, ..self })
    }

    /// Same domain with half the spacing and at most half the step.
    pub fn refined(&self, theta: &TripletFamily, kappa: Option<f64>) -> Result<Self> {
        let nx = 2 * self.nx - 1;
        let dx = (self.x_max - self.x_min) / (nx - 1) as f64;
        let cfl = cfl_bound(theta, dx, nx, kappa)?;
        let (dt, nt) = uniform_steps(self.horizon, (0.5 * self.dt).min(CFL_SAFETY * cfl));
        Ok(Self { nx, dt, nt, ..self.clone() })
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nx {
            self.x_max
        } else {
            self.x_min + self.dx() * i as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }
}

/// Samples `psi` at the grid nodes.
pub fn sample_on_grid(psi: &SampledFunction, grid: &GridSpec) -> Vec<f64> {
    grid.nodes().into_iter().map(|x| psi.value(x)).collect()
}

/// One explicit step from `slice` (the values at `t_n`).
pub fn step_explicit(slice: &[f64], theta: &TripletFamily, grid: &GridSpec, kappa: Option<f64>) -> Result<Vec<f64>> {
    let scheme = ExplicitScheme::new(theta, grid.dx(), grid.nx, kappa.unwrap_or(grid.dx()))?;
    if let Some(node) = slice.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteValue { node, step: 0 });
    }
    scheme.step(slice, grid.dt, 0)
}

/// Solves from `v(0) = ψ` up to `grid.horizon`.
pub fn solve(
    psi: &SampledFunction,
    theta: &TripletFamily,
    grid: &GridSpec,
    opts: &SolverOptions,
) -> Result<ValueSurface> {
    family_condition_report(theta, &DEFAULT_EPS_LADDER)?.ensure()?;
    let initial = sample_on_grid(psi, grid);
    solve_from_samples(initial, theta, grid, opts)
}

/// Same as [`solve`] with the initial slice given directly.
pub fn solve_from_samples(
    initial: Vec<f64>,
    theta: &TripletFamily,
    grid: &GridSpec,
    opts: &SolverOptions,
) -> Result<ValueSurface> {
    if initial.len() != grid.nx {
        return Err(Error::InvalidParameter(format!("expected {} samples, got {}", grid.nx, initial.len())));
    }
    if let Some(node) = initial.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteValue { node, step: 0 });
    }
    let started = Instant::now();
    let kappa = opts.kappa.unwrap_or(grid.dx());
    let scheme = ExplicitScheme::new(theta, grid.dx(), grid.nx, kappa)?;
    let bound = scheme.cfl_bound();
    if grid.nt > 0 && grid.dt > bound * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt: grid.dt, bound });
    }
    let stride = opts.record_stride.max(1);
    let psi_fingerprint = digest_samples(&initial);
    let mut times = vec![0.0];
    let mut values = vec![initial.clone()];
    let mut current = initial;
    let mut slack = 0.0f64;
    let max_of = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for n in 0..grid.nt {
        let next = scheme.step(&current, grid.dt, n + 1)?;
        slack = slack.max(max_of(&next) - max_of(&current));
        current = next;
        let step = n + 1;
        if step % stride == 0 || step == grid.nt {
            times.push(if step == grid.nt { grid.horizon } else { grid.dt * step as f64 });
            values.push(current.clone());
        }
    }
    Ok(ValueSurface {
        grid: grid.clone(),
        kappa,
        times,
        values,
        theta_fingerprint: theta.fingerprint(),
        psi_fingerprint,
        diagnostics: SolveDiagnostics {
            max_principle_slack: slack,
            steps: grid.nt,
            runtime_secs: started.elapsed().as_secs_f64(),
        },
    })
}

/// `v(t, x)` by bilinear interpolation.
pub fn evaluate(surface: &ValueSurface, t: f64, x: f64) -> Result<f64> {
    surface.evaluate(t, x)
}
