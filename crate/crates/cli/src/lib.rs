//! Batch front end: reads a [`RunConfig`], runs one pipeline and writes its
//! artifacts (CSV for tables and surfaces, JSON for manifests and reports).

mod config;

use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use nonlinear_levy::levy::{family_condition_report, ConditionReport, JumpFamily, TripletFamily, DEFAULT_EPS_LADDER};
use nonlinear_levy::sim::{default_policy_set, worst_case_expectation, write_estimates_csv, McEstimate};
use nonlinear_levy::solver::{solve, GridSpec, SolverOptions, ValueSurface};
use nonlinear_levy::validation::{
    check_generator_conditions, check_generator_scaling, check_regularity, check_scaling, check_semigroup, CheckReport,
    SemigroupConfig, SolverConfig,
};
use serde::{Deserialize, Serialize};

pub use config::{Command, GridConfig, McConfig, Psi, PsiSpec, RunConfig, ValidationConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Library(#[from] nonlinear_levy::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

/// Files written by a run and whether every gated check passed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub passed: bool,
    pub files: Vec<PathBuf>,
    pub reports: Vec<CheckReport>,
}

/// One row of `comparison.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub x: f64,
    pub pide: f64,
    pub mc_best: f64,
    pub mc_std_error: f64,
    pub best_policy: String,
    /// `mc_best − pide`.
    pub gap: f64,
    /// `scheme_tol + 3·mc_std_error`.
    pub allowed: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub x_query: f64,
    pub horizon: f64,
    pub value: f64,
    pub grid: GridSpec,
    pub kappa: f64,
    pub conditions: ConditionReport,
    pub max_principle_slack: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: Command,
    pub seed: u64,
    pub n_policies: usize,
    pub best: Vec<McEstimate>,
    pub config: RunConfig,
    /// Seconds since the Unix epoch; the only field that differs between identical runs.
    pub created_unix: u64,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    psi: Psi,
    out: PathBuf,
    files: Vec<PathBuf>,
}

impl Context<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&mut self, name: &str) -> Result<File, CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        self.files.push(path);
        Ok(file)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let path = self.path(name);
        nonlinear_levy::io::write_json(&path, value)?;
        self.files.push(path);
        Ok(())
    }

    fn grid(&self, refinements: usize) -> Result<GridSpec, CliError> {
        let (theta, g) = (&self.cfg.theta, &self.cfg.grid);
        let mut grid = GridSpec::centered(theta, g.x_query, g.horizon, g.dx, g.kappa)?;
        if let Some(dt) = g.dt {
            grid = grid.with_dt(theta, dt, g.kappa)?;
        }
        for _ in 0..refinements {
            grid = grid.refined(theta, g.kappa)?;
        }
        Ok(grid)
    }

    fn solve(&self, refinements: usize) -> Result<ValueSurface, CliError> {
        let opts = SolverOptions { kappa: self.cfg.grid.kappa, record_stride: self.cfg.grid.record_stride };
        Ok(solve(&self.psi.function, &self.cfg.theta, &self.grid(refinements)?, &opts)?)
    }

    fn value(&self, s: &ValueSurface) -> Result<f64, CliError> {
        Ok(s.evaluate(s.horizon(), self.cfg.grid.x_query)?)
    }

    /// Configured allowance, or twice the change under one refinement.
    fn scheme_tol(&self, coarse: &ValueSurface) -> Result<f64, CliError> {
        match self.cfg.validation.scheme_tol {
            Some(t) => Ok(t),
            None => Ok(2.0 * (self.value(coarse)? - self.value(&self.solve(1)?)?).abs()),
        }
    }

    fn write_surface(&mut self, s: &ValueSurface) -> Result<(), CliError> {
        let file = self.create("surface.csv")?;
        s.write_csv(file)?;
        Ok(())
    }

    /// Worst-case estimates at every configured starting point, horizon `T`.
    fn estimates(&self, surface: Option<&ValueSurface>) -> Result<Vec<(McEstimate, Vec<McEstimate>)>, CliError> {
        let (cfg, mc) = (self.cfg, &self.cfg.mc);
        let surface = if mc.feedback { surface } else { None };
        let policies = default_policy_set(&cfg.theta, mc.m_intervals, cfg.grid.horizon, surface)?;
        mc.x_points
            .iter()
            .map(|&x| {
                Ok(worst_case_expectation(
                    &cfg.theta,
                    &self.psi.function,
                    &policies,
                    x,
                    mc.n_paths,
                    &mc.sim(),
                    cfg.seed,
                )?)
            })
            .collect()
    }
}

fn require_horizon(cfg: &RunConfig, command: Command) -> Result<(), CliError> {
    if cfg.grid.horizon > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config { key: "grid.horizon".into(), message: format!("{command:?} needs a positive horizon") })
    }
}

/// `(α, k₊, k₋)` when `theta` is a pure stable family (zero drift and diffusion).
fn pure_stable(theta: &TripletFamily) -> Option<(f64, [f64; 2], [f64; 2])> {
    let zero = |i: &nonlinear_levy::levy::Interval| i.lo() == 0.0 && i.hi() == 0.0;
    match &theta.jump_family {
        JumpFamily::StableCoefficients { alpha, k_plus, k_minus }
            if zero(&theta.drift_range) && zero(&theta.diffusion_range) =>
        {
            Some((*alpha, [k_plus.lo(), k_plus.hi()], [k_minus.lo(), k_minus.hi()]))
        }
        _ => None,
    }
}

fn scaling_reports(ctx: &Context<'_>) -> Result<Vec<CheckReport>, CliError> {
    let Some((alpha, kp, km)) = pure_stable(&ctx.cfg.theta) else {
        return Err(CliError::Config {
            key: "theta".into(),
            message: "the scaling check needs stable jumps with zero drift and diffusion".into(),
        });
    };
    let ks = (kp.try_into()?, km.try_into()?);
    let v = &ctx.cfg.validation;
    let solver = SolverConfig { dx: ctx.cfg.grid.dx, kappa: ctx.cfg.grid.kappa };
    Ok(vec![
        check_scaling(alpha, ks, &ctx.psi.function, v.lambda, v.scaling_t, &solver)?,
        check_generator_scaling(alpha, ks, v.lambda, v.scaling_cases, ctx.cfg.seed)?,
    ])
}

/// Runs `command` on `cfg`; relative paths in the config resolve against `base`.
///
/// The family is gated by its condition report before any work is done.
pub fn run(cfg: &RunConfig, command: Command, base: &Path) -> Result<RunOutcome, CliError> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(CliError::Config {
                key: "command".into(),
                message: format!("config is for {c:?} but {command:?} was requested"),
            });
        }
    }
    let conditions = family_condition_report(&cfg.theta, &DEFAULT_EPS_LADDER)?;
    conditions.ensure()?;
    let psi = cfg.psi.build(base)?;
    let out = base.join(&cfg.out);
    std::fs::create_dir_all(&out).map_err(|source| CliError::Io { path: out.clone(), source })?;
    let mut ctx = Context { cfg, psi, out, files: Vec::new() };
    let mut reports = Vec::new();
    let mut passed = true;

    match command {
        Command::Solve => {
            let s = ctx.solve(0)?;
            ctx.write_surface(&s)?;
            let summary = SolveSummary {
                x_query: cfg.grid.x_query,
                horizon: s.horizon(),
                value: ctx.value(&s)?,
                grid: s.grid.clone(),
                kappa: s.kappa,
                conditions,
                max_principle_slack: s.diagnostics.max_principle_slack,
                steps: s.diagnostics.steps,
            };
            ctx.write_json("summary.json", &summary)?;
        }
        Command::Simulate => {
            require_horizon(cfg, command)?;
            let surface = if cfg.mc.feedback { Some(ctx.solve(0)?) } else { None };
            let results = ctx.estimates(surface.as_ref())?;
            let all: Vec<McEstimate> = results.iter().flat_map(|(_, all)| all.iter().cloned()).collect();
            write_estimates_csv(&all, ctx.create("estimates.csv")?)?;
            let manifest = Manifest {
                command,
                seed: cfg.seed,
                n_policies: results.first().map_or(0, |r| r.1.len()),
                best: results.iter().map(|r| r.0.clone()).collect(),
                config: cfg.clone(),
                created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            };
            ctx.write_json("manifest.json", &manifest)?;
        }
        Command::Compare => {
            require_horizon(cfg, command)?;
            let s = ctx.solve(0)?;
            let tol = ctx.scheme_tol(&s)?;
            let results = ctx.estimates(Some(&s))?;
            let mut rows = Vec::new();
            for (x, (best, _)) in cfg.mc.x_points.iter().zip(&results) {
                let pide = s.evaluate(s.horizon(), *x)?;
                let gap = best.mean - pide;
                let allowed = tol + 3.0 * best.std_error;
                rows.push(ComparisonRow {
                    x: *x,
                    pide,
                    mc_best: best.mean,
                    mc_std_error: best.std_error,
                    best_policy: best.policy_label.clone(),
                    gap,
                    allowed,
                    within: gap <= allowed,
                });
            }
            passed = rows.iter().all(|r| r.within);
            ctx.write_surface(&s)?;
            let mut w = csv::Writer::from_writer(ctx.create("comparison.csv")?);
            for r in &rows {
                w.serialize(r).map_err(nonlinear_levy::Error::from)?;
            }
            w.flush().map_err(nonlinear_levy::Error::from)?;
        }
        Command::Validate => {
            reports.extend(check_generator_conditions(&cfg.theta, cfg.validation.generator_cases, cfg.seed)?);
            let s = ctx.solve(0)?;
            reports.push(check_regularity(&s, ctx.psi.lip, ctx.psi.sup));
            let u = cfg.validation.u.unwrap_or(0.5 * cfg.grid.horizon);
            if u > 0.0 && u < cfg.grid.horizon {
                let sg = SemigroupConfig {
                    u,
                    x_points: cfg.mc.x_points.clone(),
                    n_paths: cfg.mc.n_paths,
                    m_intervals: cfg.mc.m_intervals,
                    sim: cfg.mc.sim(),
                    seed: cfg.seed,
                    scheme_tol: ctx.scheme_tol(&s)?,
                    expect_equality: cfg.validation.expect_equality,
                };
                reports.push(check_semigroup(&cfg.theta, &s, &sg)?);
            }
            if pure_stable(&cfg.theta).is_some_and(|(alpha, _, _)| alpha > 1.0) {
                reports.extend(scaling_reports(&ctx)?);
            }
        }
        Command::Scaling => reports.extend(scaling_reports(&ctx)?),
    }
    if !reports.is_empty() {
        passed = reports.iter().all(|r| r.pass);
        ctx.write_json("reports.json", &reports)?;
    }
    Ok(RunOutcome { passed, files: ctx.files, reports })
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
pub mod book_cli {}
