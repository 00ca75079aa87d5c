use std::path::{Path, PathBuf};

use nonlinear_levy::generator::{GridFunction, SampledFunction};
use nonlinear_levy::levy::TripletFamily;
use nonlinear_levy::sim::{SimConfig, SmallJumps};
use nonlinear_levy::solver::DEFAULT_DX;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Simulate,
    Compare,
    Validate,
    Scaling,
}

/// One batch run, as read from a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Must agree with the command given on the command line when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub theta: TripletFamily,
    pub psi: PsiSpec,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub horizon: f64,
    pub x_query: f64,
    pub dx: f64,
    /// Overrides the CFL-derived step.
    pub dt: Option<f64>,
    /// Small-jump split radius of the scheme; `None` uses `dx`.
    pub kappa: Option<f64>,
    pub record_stride: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { horizon: 1.0, x_query: 0.0, dx: DEFAULT_DX, dt: None, kappa: None, record_stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub n_paths: usize,
    pub m_intervals: usize,
    pub x_points: Vec<f64>,
    pub eps_sim: f64,
    pub dt_sim: Option<f64>,
    pub small_jumps: SmallJumps,
    /// Add the feedback policy read from a solved surface.
    pub feedback: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            m_intervals: 2,
            x_points: vec![0.0],
            eps_sim: 1e-2,
            dt_sim: None,
            small_jumps: SmallJumps::Gaussian,
            feedback: false,
        }
    }
}

impl McConfig {
    pub fn sim(&self) -> SimConfig {
        SimConfig { eps_sim: self.eps_sim, dt_sim: self.dt_sim, small_jumps: self.small_jumps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationConfig {
    /// Semigroup split time; `None` means half the horizon. `0` skips the check.
    pub u: Option<f64>,
    /// Discretization allowance; `None` measures it by one refinement.
    pub scheme_tol: Option<f64>,
    pub expect_equality: bool,
    pub lambda: f64,
    pub scaling_t: f64,
    pub generator_cases: usize,
    pub scaling_cases: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            u: None,
            scheme_tol: None,
            expect_equality: false,
            lambda: 2.0,
            scaling_t: 0.5,
            generator_cases: 1000,
            scaling_cases: 100,
        }
    }
}

/// Registry of bounded Lipschitz initial conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSpec {
    /// `clamp(x / width, 0, 1)`.
    IndicatorRamp {
        #[serde(default = "one")]
        width: f64,
    },
    /// `tanh(x / scale)`.
    TanhLike {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `min(x², cap)`.
    CappedQuadratic {
        #[serde(default = "one")]
        cap: f64,
    },
    /// `min(|x|, cap)`.
    CappedAbs {
        #[serde(default = "three")]
        cap: f64,
    },
    /// Uniformly spaced `x,psi` samples; the declared constants are checked against the data.
    Csv { path: PathBuf, sup: f64, lip: f64 },
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

/// An initial condition with its declared `‖ψ‖_∞` and `Lip(ψ)`.
#[derive(Debug, Clone)]
pub struct Psi {
    pub function: SampledFunction,
    pub sup: f64,
    pub lip: f64,
}

fn config_error(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config { key: key.to_string(), message: message.into() }
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(config_error(key, format!("must be positive, got {v}")))
    }
}

impl PsiSpec {
    /// `base` resolves relative CSV paths (normally the config file's directory).
    pub fn build(&self, base: &Path) -> Result<Psi, CliError> {
        Ok(match *self {
            PsiSpec::IndicatorRamp { width } => {
                let w = positive("psi.width", width)?;
                Psi {
                    function: SampledFunction::analytic(move |x: f64| (x / w).clamp(0.0, 1.0), 1.0, 0.0)
                        .with_kinks([0.0, w]),
                    sup: 1.0,
                    lip: 1.0 / w,
                }
            }
            PsiSpec::TanhLike { scale } => {
                let s = positive("psi.scale", scale)?;
                Psi {
                    function: SampledFunction::analytic(move |x: f64| (x / s).tanh(), 1.0, 1.0 / s)
                        .with_second_derivative(0.0),
                    sup: 1.0,
                    lip: 1.0 / s,
                }
            }
            PsiSpec::CappedQuadratic { cap } => {
                let c = positive("psi.cap", cap)?;
                let r = c.sqrt();
                Psi {
                    function: SampledFunction::analytic(move |x: f64| (x * x).min(c), c, 0.0)
                        .with_second_derivative(2.0)
                        .with_kinks([-r, r]),
                    sup: c,
                    lip: 2.0 * r,
                }
            }
            PsiSpec::CappedAbs { cap } => {
                let c = positive("psi.cap", cap)?;
                Psi {
                    function: SampledFunction::analytic(move |x: f64| x.abs().min(c), c, 0.0).with_kinks([-c, 0.0, c]),
                    sup: c,
                    lip: 1.0,
                }
            }
            PsiSpec::Csv { ref path, sup, lip } => {
                let path = base.join(path);
                let (x_min, dx, values) = read_samples(&path)?;
                let observed_sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let observed_lip = values.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs() / dx));
                if observed_sup > sup * (1.0 + 1e-12) {
                    return Err(config_error("psi.sup", format!("data reaches {observed_sup} > declared {sup}")));
                }
                if observed_lip > lip * (1.0 + 1e-12) {
                    return Err(config_error("psi.lip", format!("data has slope {observed_lip} > declared {lip}")));
                }
                let grid = GridFunction::new(x_min, dx, values)?;
                let gradient = (grid.value(0.5 * dx) - grid.value(-0.5 * dx)) / dx;
                Psi { function: SampledFunction::from_grid(grid, gradient, None), sup, lip }
            }
        })
    }
}

#[derive(Deserialize)]
struct SampleRow {
    x: f64,
    psi: f64,
}

fn read_samples(path: &Path) -> Result<(f64, f64, Vec<f64>), CliError> {
    let file = std::fs::File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let rows: Vec<SampleRow> = csv::Reader::from_reader(file)
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| config_error("psi.path", format!("{}: {e}", path.display())))?;
    if rows.len() < 2 {
        return Err(config_error("psi.path", "need at least two samples"));
    }
    let dx = rows[1].x - rows[0].x;
    let n = rows.len() - 1;
    let span = rows[n].x - rows[0].x;
    let uniform = dx > 0.0
        && rows.windows(2).all(|w| ((w[1].x - w[0].x) - dx).abs() <= 1e-9 * dx)
        && (span - dx * n as f64).abs() <= 1e-9 * span;
    if !uniform {
        return Err(config_error("psi.path", "x must be increasing and uniformly spaced"));
    }
    Ok((rows[0].x, span / n as f64, rows.into_iter().map(|r| r.psi).collect()))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            config_error(if key == "." { "(root)" } else { &key }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Range checks that serde cannot express.
    pub fn validate(&self) -> Result<(), CliError> {
        self.theta.validate().map_err(|e| config_error("theta", e.to_string()))?;
        let g = &self.grid;
        if !(g.horizon >= 0.0 && g.horizon.is_finite()) {
            return Err(config_error("grid.horizon", format!("must be nonnegative, got {}", g.horizon)));
        }
        positive("grid.dx", g.dx)?;
        if let Some(dt) = g.dt {
            positive("grid.dt", dt)?;
        }
        if let Some(k) = g.kappa {
            positive("grid.kappa", k)?;
        }
        if g.record_stride == 0 {
            return Err(config_error("grid.record_stride", "must be at least 1"));
        }
        let m = &self.mc;
        if m.n_paths == 0 {
            return Err(config_error("mc.n_paths", "must be at least 1"));
        }
        if m.m_intervals == 0 {
            return Err(config_error("mc.m_intervals", "must be at least 1"));
        }
        if m.x_points.is_empty() || m.x_points.iter().any(|x| !x.is_finite()) {
            return Err(config_error("mc.x_points", "need at least one finite starting point"));
        }
        positive("mc.eps_sim", m.eps_sim)?;
        if let Some(dt) = m.dt_sim {
            positive("mc.dt_sim", dt)?;
        }
        let v = &self.validation;
        if let Some(u) = v.u {
            if !(u == 0.0 || (u > 0.0 && u < g.horizon)) {
                return Err(config_error("validation.u", format!("must be 0 or inside (0, {}), got {u}", g.horizon)));
            }
        }
        if let Some(t) = v.scheme_tol {
            if !(t >= 0.0) {
                return Err(config_error("validation.scheme_tol", "must be nonnegative"));
            }
        }
        positive("validation.lambda", v.lambda)?;
        positive("validation.scaling_t", v.scaling_t)?;
        Ok(())
    }
}
