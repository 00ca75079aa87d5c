use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{g_eval, GeneratorInput, GridFunction, SampledFunction};
use crate::levy::TripletFamily;
use crate::solver::ValueSurface;

/// Vertex choice as a function of the state on a uniform grid (nearest node, clamped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackTable {
    pub x_min: f64,
    pub dx: f64,
    pub vertices: Vec<usize>,
}

impl FeedbackTable {
    pub fn lookup(&self, x: f64) -> usize {
        let s = ((x - self.x_min) / self.dx).round();
        let i = if s.is_nan() || s < 0.0 { 0 } else { (s as usize).min(self.vertices.len() - 1) };
        self.vertices[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum PolicyChoice {
    Vertex(usize),
    /// Resolved once per path at the start of the interval.
    Feedback(FeedbackTable),
}

/// Piecewise-constant choice of box vertices on `0 = t_0 < … < t_m = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPolicy {
    pub id: u64,
    pub label: String,
    pub breakpoints: Vec<f64>,
    pub choices: Vec<PolicyChoice>,
}

fn uniform_breakpoints(m: usize, horizon: f64) -> Vec<f64> {
    (0..=m).map(|j| if j == m { horizon } else { horizon * j as f64 / m as f64 }).collect()
}

impl ControlPolicy {
    /// Same vertex on the whole horizon.
    pub fn constant(vertex: usize, horizon: f64, id: u64) -> Self {
        Self {
            id,
            label: format!("const[v{vertex}]"),
            breakpoints: vec![0.0, horizon],
            choices: vec![PolicyChoice::Vertex(vertex)],
        }
    }

    /// Explicit vertex per interval of a uniform partition.
    pub fn piecewise(vertices: &[usize], horizon: f64, id: u64) -> Self {
        let label = vertices.iter().map(|v| format!("v{v}")).collect::<Vec<_>>().join(",");
        Self {
            id,
            label: format!("piecewise[{label}]"),
            breakpoints: uniform_breakpoints(vertices.len(), horizon),
            choices: vertices.iter().map(|&v| PolicyChoice::Vertex(v)).collect(),
        }
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().expect("policy has breakpoints")
    }

    pub fn vertex_for(&self, interval: usize, x: f64) -> usize {
        match &self.choices[interval] {
            PolicyChoice::Vertex(v) => *v,
            PolicyChoice::Feedback(table) => table.lookup(x),
        }
    }

    /// Checks the partition and that every choice is a vertex of `theta`.
    pub fn validate(&self, theta: &TripletFamily) -> Result<()> {
        let bp = &self.breakpoints;
        if bp.len() < 2 || bp[0] != 0.0 || bp.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(format!("policy {} needs 0 = t_0 < … < t_m", self.label)));
        }
        if self.choices.len() + 1 != bp.len() {
            return Err(Error::InvalidParameter(format!("policy {} needs one choice per interval", self.label)));
        }
        let n = theta.vertices().len();
        let ok = self.choices.iter().all(|c| match c {
            PolicyChoice::Vertex(v) => *v < n,
            PolicyChoice::Feedback(t) => !t.vertices.is_empty() && t.vertices.iter().all(|v| *v < n),
        });
        if !ok {
            return Err(Error::InvalidParameter(format!("policy {} uses a vertex outside the family", self.label)));
        }
        Ok(())
    }
}

/// Maximum number of states at which a feedback table evaluates the generator.
const FEEDBACK_POINTS: usize = 512;

/// Argmax vertex of `G(∂_x v, ∂_xx v, v(x + ·))` on (a subsample of) the surface nodes at surface time `t`.
pub fn feedback_table(theta: &TripletFamily, surface: &ValueSurface, t: f64) -> Result<FeedbackTable> {
    let row = surface.slice_at(t)?;
    let grid = &surface.grid;
    let dx = grid.dx();
    let n = grid.nx;
    let stride = n.div_ceil(FEEDBACK_POINTS).max(1);
    let values: std::sync::Arc<[f64]> = row.clone().into();
    let base = GridFunction::new(grid.x_min, dx, values)?;
    let mut vertices = Vec::new();
    let mut i = 0;
    while i < n {
        let (l, r) = (row[i.saturating_sub(1)], row[(i + 1).min(n - 1)]);
        let p = 0.5 * (r - l) / dx;
        let q = (r - 2.0 * row[i] + l) / (dx * dx);
        let f = SampledFunction::from_grid(base.translated(grid.x(i)), p, Some(q));
        let g = g_eval(theta, &GeneratorInput::new(p, q, f).with_kappa(surface.kappa))?;
        vertices.push(g.argmax);
        i += stride;
    }
    Ok(FeedbackTable { x_min: grid.x_min, dx: dx * stride as f64, vertices })
}

/// Constant-vertex policies, every single switch between two distinct vertices
/// at an interior breakpoint of a uniform `m`-partition, and, with a surface,
/// one feedback policy.
///
/// The surface is read backwards in time: at policy time `s` the feedback
/// uses the level `surface.horizon() − s`, so a surface solved to a longer
/// horizon than the policy serves as the continuation value of a later start.
pub fn default_policy_set(
    theta: &TripletFamily,
    m_intervals: usize,
    horizon: f64,
    surface: Option<&ValueSurface>,
) -> Result<Vec<ControlPolicy>> {
    if m_intervals == 0 {
        return Err(Error::InvalidParameter("at least one interval is required".into()));
    }
    let n_vertices = theta.vertices().len();
    let mut out = Vec::new();
    for v in 0..n_vertices {
        let mut p = ControlPolicy::constant(v, horizon, out.len() as u64);
        p.breakpoints = uniform_breakpoints(m_intervals, horizon);
        p.choices = vec![PolicyChoice::Vertex(v); m_intervals];
        out.push(p);
    }
    for switch in 1..m_intervals {
        for a in 0..n_vertices {
            for b in (0..n_vertices).filter(|&b| b != a) {
                let choices: Vec<usize> = (0..m_intervals).map(|j| if j < switch { a } else { b }).collect();
                let mut p = ControlPolicy::piecewise(&choices, horizon, out.len() as u64);
                p.label = format!("switch[v{a}->v{b}@{}]", p.breakpoints[switch]);
                out.push(p);
            }
        }
    }
    if let Some(surface) = surface {
        if surface.horizon() + 1e-12 < horizon {
            return Err(Error::OutOfHorizon { t: horizon, horizon: surface.horizon() });
        }
        let breakpoints = uniform_breakpoints(m_intervals, horizon);
        let choices = breakpoints[..m_intervals]
            .iter()
            .map(|s| Ok(PolicyChoice::Feedback(feedback_table(theta, surface, surface.horizon() - s)?)))
            .collect::<Result<Vec<_>>>()?;
        out.push(ControlPolicy { id: out.len() as u64, label: "feedback".into(), breakpoints, choices });
    }
    Ok(out)
}
