//! Explicit monotone scheme for `∂_t v = G(∂_x v, ∂_xx v, v(t, x + ·))`.
//!
//! For each vertex `(b, c, F)` of the family box the discrete operator is
//!
//! ```text
//! L v_i = b̂ D₁v_i + ½ ĉ D₂v_i + Σ_m W_m (v_{i+m} − v_i) + Σ_m W'_m (v_{i−m} − v_i)
//! ```
//!
//! * the jump sum integrates the piecewise-linear interpolant of `v` exactly
//!   against `F` on `|z| > κ` (hat-function weights `W_m ≥ 0`);
//! * `b̂ = b − ∫_{|z|>κ} h(z) F(dz)` absorbs the compensator;
//! * `ĉ = max(c + σ²_κ − e_κ, |b̂| Δx)` where `σ²_κ` is the small-jump variance
//!   and `e_κ = ∫_{|z|>κ} (z − a)(b − z) F(dz)` removes the curvature that linear
//!   interpolation adds on each cell `[a, b]`. The `|b̂| Δx` floor keeps the
//!   central drift difference monotone; when it binds the difference is the
//!   upwind one.
//!
//! The update `v + Δt · max_vertices L v` is monotone under the CFL bound.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::levy::{power_integral, LevyMeasure, TripletFamily, Truncation};
use crate::quad::GaussLegendre;

/// Cells whose left end lies beyond this many grid steps use Gauss–Legendre
/// instead of the closed-form moments, which cancel badly far out.
const FAR_CELL: f64 = 4.0;

/// Sparse stencils with at most this many nonzero weights skip the FFT.
const SPARSE_LIMIT: usize = 64;

/// Per-side correlation `S_i = Σ_{m≥1} W_m d_{i+m}` with `d_j = 0` past the grid.
#[derive(Clone)]
enum Correlation {
    Empty,
    Sparse(Vec<(usize, f64)>),
    Fft { size: usize, weights_hat: Arc<[Complex<f64>]>, forward: Arc<dyn Fft<f64>>, inverse: Arc<dyn Fft<f64>> },
}

impl std::fmt::Debug for Correlation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Correlation::Empty => write!(f, "Empty"),
            Correlation::Sparse(w) => write!(f, "Sparse({} weights)", w.len()),
            Correlation::Fft { size, .. } => write!(f, "Fft(size {size})"),
        }
    }
}

impl Correlation {
    fn new(weights: &[f64], n: usize) -> Self {
        let nonzero: Vec<(usize, f64)> =
            weights.iter().enumerate().skip(1).filter(|(m, w)| **w != 0.0 && *m < n).map(|(m, w)| (m, *w)).collect();
        if nonzero.is_empty() {
            return Correlation::Empty;
        }
        if nonzero.len() <= SPARSE_LIMIT {
            return Correlation::Sparse(nonzero);
        }
        let size = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut w_hat = vec![Complex::new(0.0, 0.0); size];
        for &(m, w) in &nonzero {
            w_hat[m] = Complex::new(w, 0.0);
        }
        forward.process(&mut w_hat);
        let scale = 1.0 / size as f64;
        for x in &mut w_hat {
            *x *= scale;
        }
        Correlation::Fft { size, weights_hat: w_hat.into(), forward, inverse }
    }

    fn apply(&self, d: &[f64]) -> Vec<f64> {
        let n = d.len();
        match self {
            Correlation::Empty => vec![0.0; n],
            Correlation::Sparse(ws) => {
                (0..n).map(|i| ws.iter().filter(|(m, _)| i + m < n).map(|(m, w)| w * d[i + m]).sum()).collect()
            }
            Correlation::Fft { size, weights_hat, forward, inverse } => {
                // S_i = (W * reverse(d))[n − 1 − i]
                let mut buf = vec![Complex::new(0.0, 0.0); *size];
                for (j, x) in d.iter().rev().enumerate() {
                    buf[j] = Complex::new(*x, 0.0);
                }
                forward.process(&mut buf);
                for (b, w) in buf.iter_mut().zip(weights_hat.iter()) {
                    *b *= w;
                }
                inverse.process(&mut buf);
                (0..n).map(|i| buf[n - 1 - i].re).collect()
            }
        }
    }
}

/// Hat weights of one side of one measure.
#[derive(Debug, Clone)]
struct SideStencil {
    correlation: Correlation,
    /// `Σ_{m≥1} W_m`, including nodes beyond the grid.
    total: f64,
}

/// Discretized jump operator of one measure on a uniform grid.
#[derive(Debug, Clone)]
pub(crate) struct JumpStencil {
    plus: SideStencil,
    minus: SideStencil,
    /// `−∫_{|z|>κ} h(z) F(dz)`.
    pub(crate) drift_shift: f64,
    /// `σ²_κ − e_κ`.
    pub(crate) diffusion_shift: f64,
}

/// `(∫ s^{-α-1}, ∫ t s^{-α-1}, ∫ t² s^{-α-1})` over `s ∈ [c + t0, c + 1]`, `t = s − c`.
fn cell_moments(alpha: f64, c: f64, t0: f64, rule: &GaussLegendre) -> (f64, f64, f64) {
    let (l, r) = (c + t0, c + 1.0);
    if c >= FAR_CELL {
        let mut m = (0.0, 0.0, 0.0);
        for (s, w) in rule.mapped(l, r) {
            let d = w * s.powf(-alpha - 1.0);
            let t = s - c;
            m.0 += d;
            m.1 += d * t;
            m.2 += d * t * t;
        }
        m
    } else {
        let p = |e: f64| power_integral(e, l, r).expect("finite cell moment");
        let (pm1, p0, p1) = (p(-alpha - 1.0), p(-alpha), p(1.0 - alpha));
        (pm1, p0 - c * pm1, p1 - 2.0 * c * p0 + c * c * pm1)
    }
}

/// Hat weights, `e_κ` contribution (in units of `Δx²`) and total for one stable side with unit weight,
/// all in the scaled variable `s = z / Δx`.
fn stable_side(alpha: f64, s_kappa: f64, n: usize) -> (Vec<f64>, f64, f64) {
    let rule = GaussLegendre::new(16);
    let mut w = vec![0.0; n + 2];
    let mut m2 = 0.0;
    let first = s_kappa.floor() as usize;
    for c in first..=n {
        let t0 = if c == first { s_kappa - c as f64 } else { 0.0 };
        if t0 >= 1.0 {
            continue;
        }
        let (i0, i1, i2) = cell_moments(alpha, c as f64, t0, &rule);
        w[c] += i0 - i1;
        w[c + 1] += i1;
        m2 += i1 - i2;
    }
    // cells past the grid: the cell average of t(1 − t) is 1/6
    let far = (n + 1) as f64;
    m2 += far.powf(-alpha) / (6.0 * alpha);
    // Σ_{m≥1} hat_m = 1 − hat_0 on s > 0
    let mut total = s_kappa.powf(-alpha) / alpha;
    if s_kappa < 1.0 {
        let (l, r) = (s_kappa, 1.0);
        total -= power_integral(-alpha - 1.0, l, r).unwrap() - power_integral(-alpha, l, r).unwrap();
    }
    w[0] = 0.0;
    (w, m2, total)
}

impl JumpStencil {
    pub(crate) fn new(measure: &LevyMeasure, h: Truncation, dx: f64, kappa: f64, n: usize) -> Result<Self> {
        let s_kappa = kappa / dx;
        let mut weights = [vec![0.0; n + 2], vec![0.0; n + 2]];
        let mut totals = [0.0, 0.0];
        let mut m2 = 0.0;
        match measure {
            LevyMeasure::Zero => {}
            LevyMeasure::FiniteAtomic(atoms) => {
                for a in atoms.iter().filter(|a| a.position.abs() > kappa && a.weight > 0.0) {
                    let side = usize::from(a.position < 0.0);
                    let s = a.position.abs() / dx;
                    let c = s.floor();
                    let t = s - c;
                    let c = c as usize;
                    if c < n + 1 {
                        if c >= 1 {
                            weights[side][c] += a.weight * (1.0 - t);
                        }
                        weights[side][c + 1] += a.weight * t;
                    }
                    totals[side] += a.weight * (1.0 - (1.0 - s).max(0.0));
                    m2 += a.weight * t * (1.0 - t) * dx * dx;
                }
            }
            LevyMeasure::AlphaStable(p) => {
                let (w, e, total) = stable_side(p.alpha, s_kappa, n);
                let scale = dx.powf(-p.alpha);
                for (side, k) in [(0, p.k_plus), (1, p.k_minus)] {
                    if k > 0.0 {
                        weights[side] = w.iter().map(|x| k * scale * x).collect();
                        totals[side] = k * scale * total;
                        m2 += k * scale * dx * dx * e;
                    }
                }
            }
        }
        let sigma2 = measure.small_jump_second_moment(kappa);
        let comp = measure.compensator_drift(h, kappa)?;
        let [wp, wm] = weights;
        Ok(Self {
            plus: SideStencil { correlation: Correlation::new(&wp, n), total: totals[0] },
            minus: SideStencil { correlation: Correlation::new(&wm, n), total: totals[1] },
            drift_shift: -comp,
            diffusion_shift: sigma2 - m2,
        })
    }

    pub(crate) fn total_rate(&self) -> f64 {
        self.plus.total + self.minus.total
    }

    /// `J_i = Σ_m W_m (v_{i+m} − v_i) + Σ_m W'_m (v_{i−m} − v_i)` with clamped extension.
    pub(crate) fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let (first, last) = (v[0], v[n - 1]);
        let d_plus: Vec<f64> = v.iter().map(|x| x - last).collect();
        let d_minus: Vec<f64> = v.iter().rev().map(|x| x - first).collect();
        let s_plus = self.plus.correlation.apply(&d_plus);
        let s_minus = self.minus.correlation.apply(&d_minus);
        (0..n)
            .map(|i| {
                s_plus[i] + (last - v[i]) * self.plus.total + s_minus[n - 1 - i] + (first - v[i]) * self.minus.total
            })
            .collect()
    }
}

/// Coefficients of one vertex's discrete operator.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct VertexOperator {
    pub(crate) drift: f64,
    pub(crate) diffusion: f64,
    /// Multiplier of each jump stencil.
    pub(crate) intensities: Vec<f64>,
    pub(crate) jump_rate: f64,
}

/// Precomputed scheme for one family, grid spacing and split radius.
#[derive(Debug, Clone)]
pub struct ExplicitScheme {
    dx: f64,
    n: usize,
    kappa: f64,
    stencils: Vec<JumpStencil>,
    vertices: Vec<VertexOperator>,
}

impl ExplicitScheme {
    pub fn new(theta: &TripletFamily, dx: f64, n: usize, kappa: f64) -> Result<Self> {
        if !(dx > 0.0) || n < 3 {
            return Err(Error::InvalidParameter("grid needs dx > 0 and at least three nodes".into()));
        }
        if !(kappa > 0.0) || !theta.truncation.is_linear_on(kappa) {
            return Err(Error::InvalidParameter(format!(
                "κ = {kappa} must be positive and inside the region where the truncation is the identity"
            )));
        }
        let basis = theta.jump_basis();
        let mut stencils = vec![JumpStencil::new(&basis.fixed, theta.truncation, dx, kappa, n)?];
        for m in &basis.basis {
            stencils.push(JumpStencil::new(m, theta.truncation, dx, kappa, n)?);
        }
        let vertices = theta
            .vertices()
            .iter()
            .map(|v| {
                let mut intensities = vec![1.0];
                intensities.extend_from_slice(&v.params[2..]);
                let mut drift = v.params[0];
                let mut diffusion = v.params[1];
                let mut jump_rate = 0.0;
                for (s, k) in stencils.iter().zip(&intensities) {
                    drift += k * s.drift_shift;
                    diffusion += k * s.diffusion_shift;
                    jump_rate += k * s.total_rate();
                }
                VertexOperator { drift, diffusion: diffusion.max(0.0).max(drift.abs() * dx), intensities, jump_rate }
            })
            .collect();
        Ok(Self { dx, n, kappa, stencils, vertices })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Largest stable step, `1 / (sup ĉ/Δx² + sup |b̂|/Δx + sup jump rate)`.
    pub fn cfl_bound(&self) -> f64 {
        let c = self.vertices.iter().map(|v| v.diffusion).fold(0.0, f64::max);
        let b = self.vertices.iter().map(|v| v.drift.abs()).fold(0.0, f64::max);
        let r = self.vertices.iter().map(|v| v.jump_rate).fold(0.0, f64::max);
        let denom = c / (self.dx * self.dx) + b / self.dx + r;
        if denom > 0.0 {
            1.0 / denom
        } else {
            f64::INFINITY
        }
    }

    /// One explicit Euler step; `step` only labels errors.
    pub fn step(&self, v: &[f64], dt: f64, step: usize) -> Result<Vec<f64>> {
        assert_eq!(v.len(), self.n, "slice length does not match the scheme");
        let bound = self.cfl_bound();
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::CflViolation { dt, bound });
        }
        let jumps: Vec<Vec<f64>> = self.stencils.iter().map(|s| s.apply(v)).collect();
        let n = self.n;
        let (inv_dx, inv_dx2) = (1.0 / self.dx, 1.0 / (self.dx * self.dx));
        let out: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let left = v[i.saturating_sub(1)];
                let right = v[(i + 1).min(n - 1)];
                let d1 = 0.5 * (right - left) * inv_dx;
                let d2 = (right - 2.0 * v[i] + left) * inv_dx2;
                let g = self
                    .vertices
                    .iter()
                    .map(|op| {
                        let j: f64 = op.intensities.iter().zip(&jumps).map(|(k, jv)| k * jv[i]).sum();
                        op.drift * d1 + 0.5 * op.diffusion * d2 + j
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                v[i] + dt * g
            })
            .collect();
        if let Some(node) = out.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteValue { node, step });
        }
        Ok(out)
    }
}
