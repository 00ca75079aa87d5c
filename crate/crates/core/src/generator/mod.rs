//! The nonlinear generator
//!
//! ```text
//! G(p, q, f) = sup_{(b,c,F) ∈ Θ} { p b + ½ q c + ∫ [f(z) − f(0) − f'(0) h(z)] F(dz) }
//! ```
//!
//! and its two-function regularization `G^κ(p, q, f, g)`, which reads `f`
//! on big jumps `|z| > κ` and `g` on small jumps. Small jumps always go
//! through the second-order Taylor surrogate `½ g''(0) ∫_{|z|≤κ} z² F(dz)`.
//!
//! Because the integrand is linear in `(b, c, F)` and every [`TripletFamily`]
//! is affine in its box coordinates, the supremum is an exact maximum over
//! box vertices.

mod function;

use std::io::Write;
use std::sync::OnceLock;

use function::Source;
pub use function::{GridFunction, SampledFunction};

use crate::error::{Error, Result};
use crate::levy::{power_integral, LevyMeasure, LevyTriplet, Side, StableParams, TripletFamily, Truncation};
use crate::quad::GaussLegendre;

/// Default split radius between the quadrature and Taylor treatments of jumps.
pub const DEFAULT_KAPPA: f64 = 1e-2;

/// Fixed composite Gauss–Legendre rule for stable tails.
///
/// `nodes` are spread over log-spaced panels of `order` points each between
/// `κ` and a cutoff `Z_max`. `Z_max` is the smallest radius whose residual
/// tail mass times the oscillation bound of `f` (at most `2·bound(f)`) is
/// below `tail_tol`; the remainder beyond it
/// is closed analytically by freezing `f` at `Z_max`.
#[derive(Debug, Clone)]
pub struct TailQuadrature {
    rule: GaussLegendre,
    panels: usize,
    tail_tol: f64,
}

impl TailQuadrature {
    pub fn new(nodes: usize, order: usize, tail_tol: f64) -> Self {
        assert!(order > 0 && nodes >= order, "need at least one panel");
        Self { rule: GaussLegendre::new(order), panels: nodes / order, tail_tol }
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }
}

impl Default for TailQuadrature {
    fn default() -> Self {
        Self::new(512, 16, 1e-10)
    }
}

fn default_quadrature() -> &'static TailQuadrature {
    static Q: OnceLock<TailQuadrature> = OnceLock::new();
    Q.get_or_init(TailQuadrature::default)
}

/// Arguments of `G`: derivative slots, test function and split radius.
#[derive(Debug, Clone)]
pub struct GeneratorInput {
    pub p: f64,
    pub q: f64,
    pub f: SampledFunction,
    pub kappa: f64,
}

impl GeneratorInput {
    pub fn new(p: f64, q: f64, f: SampledFunction) -> Self {
        Self { p, q, f, kappa: DEFAULT_KAPPA }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }
}

fn check_kappa(kappa: f64, h: Truncation) -> Result<()> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidParameter(format!("κ must be positive, got {kappa}")));
    }
    if !h.is_linear_on(kappa) {
        return Err(Error::InvalidParameter(format!(
            "κ = {kappa} exceeds the radius on which the truncation is the identity"
        )));
    }
    Ok(())
}

/// Upper end of the region `{z ≥ a}` on which `h(z) = z`, one side.
fn linear_extent(h: Truncation) -> f64 {
    match h {
        Truncation::Canonical | Truncation::CanonicalOpen => 1.0,
        Truncation::Identity => f64::INFINITY,
    }
}

/// `∫_a^b z^{-α} dz` restricted to where `h` is linear.
fn linear_first_moment(alpha: f64, h: Truncation, a: f64, b: f64) -> f64 {
    let top = b.min(linear_extent(h));
    if top <= a {
        return 0.0;
    }
    power_integral(-alpha, a, top).unwrap_or(f64::INFINITY)
}

/// `∫_{z>κ, one side} [big(s z) − big(0) − slope · h(s z)] F(dz)` for a stable side with weight `k`.
fn stable_side_integral(
    s: &StableParams,
    side: Side,
    h: Truncation,
    big: &SampledFunction,
    slope: f64,
    kappa: f64,
    quad: &TailQuadrature,
) -> Result<f64> {
    let k = match side {
        Side::Positive => s.k_plus,
        Side::Negative => s.k_minus,
    };
    if k == 0.0 {
        return Ok(0.0);
    }
    let alpha = s.alpha;
    let sign = side.sign();
    if h == Truncation::Identity && alpha <= 1.0 {
        return Err(Error::DivergentMoment(format!("identity truncation with α = {alpha} has no finite compensator")));
    }
    let lin_top = linear_extent(h);
    match &big.source {
        Source::Grid(grid) => Ok(k * grid_side_integral(grid, alpha, sign, h, big.raw_zero(), slope, kappa)),
        Source::Analytic { .. } => {
            // cutoff where the residual tail cannot exceed tail_tol
            let z_cut = (big.oscillation().max(1e-300) * k / (alpha * quad.tail_tol)).powf(1.0 / alpha);
            let z_max = z_cut.max(kappa * std::f64::consts::E);
            let (u0, u1) = (kappa.ln(), z_max.ln());
            let mut breaks: Vec<f64> =
                (0..=quad.panels).map(|i| u0 + (u1 - u0) * i as f64 / quad.panels as f64).collect();
            let mut extra: Vec<f64> =
                big.kinks().iter().map(|&x| x * sign).filter(|&z| z > kappa && z < z_max).map(f64::ln).collect();
            if lin_top > kappa && lin_top < z_max {
                extra.push(lin_top.ln());
            }
            breaks.extend(extra);
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            breaks.dedup();
            let integrand = |u: f64| {
                let z = u.exp();
                let lin = if z < lin_top || (z == lin_top && h == Truncation::Canonical) { z } else { 0.0 };
                (big.increment(sign * z) - slope * sign * lin) * (-alpha * u).exp()
            };
            let body: f64 = breaks.windows(2).map(|w| quad.rule.integrate(w[0], w[1], integrand)).sum();
            let closure = big.increment(sign * z_max) * z_max.powf(-alpha) / alpha
                - slope * sign * linear_first_moment(alpha, h, z_max, f64::INFINITY);
            Ok(k * (body + closure))
        }
    }
}

/// Exact integral of the piecewise-linear interpolant against `z^{-α-1}` on one side (unit weight).
fn grid_side_integral(
    grid: &GridFunction,
    alpha: f64,
    sign: f64,
    h: Truncation,
    f0: f64,
    slope: f64,
    kappa: f64,
) -> f64 {
    let origin = grid.origin();
    let dx = grid.dx();
    let vals = grid.values();
    let n = vals.len();
    // node positions in z on this side, increasing
    let mut zs: Vec<(f64, f64)> =
        (0..n).map(|j| ((grid.x_min() + dx * j as f64 - origin) * sign, vals[j])).filter(|(z, _)| *z > 0.0).collect();
    zs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let lin_top = linear_extent(h);
    let slope = slope * sign;
    let mut total = 0.0;
    // the segment from z = 0 to the first node is linear between f(0) and the node value
    let mut prev = (0.0f64, f0);
    let edge_value = if sign > 0.0 { vals[n - 1] } else { vals[0] };
    let mut z_end = 0.0f64;
    for &(z, v) in &zs {
        let (za, fa) = prev;
        if z > kappa {
            let lo = za.max(kappa);
            let b = (v - fa) / (z - za);
            let a = fa - b * za;
            // split at the end of the linear region of h
            let mut cuts = vec![lo, z];
            if lin_top > lo && lin_top < z {
                cuts.insert(1, lin_top);
            }
            for w in cuts.windows(2) {
                let (l, r) = (w[0], w[1]);
                let in_lin = r <= lin_top;
                let p0 = power_integral(-alpha - 1.0, l, r).unwrap();
                let p1 = power_integral(-alpha, l, r).unwrap();
                let b_eff = if in_lin { b - slope } else { b };
                total += (a - f0) * p0 + b_eff * p1;
            }
        }
        prev = (z, v);
        z_end = z;
    }
    // constant extrapolation beyond the last node (or beyond κ if the grid ends earlier)
    let start = z_end.max(kappa);
    total +=
        (edge_value - f0) * start.powf(-alpha) / alpha - slope * linear_first_moment(alpha, h, start, f64::INFINITY);
    total
}

/// Big-jump part `∫_{|z|>κ} [big(z) − big(0) − slope·h(z)] F(dz)`.
fn big_jump_integral(
    measure: &LevyMeasure,
    h: Truncation,
    big: &SampledFunction,
    slope: f64,
    kappa: f64,
    quad: &TailQuadrature,
) -> Result<f64> {
    match measure {
        LevyMeasure::Zero => Ok(0.0),
        LevyMeasure::FiniteAtomic(atoms) => Ok(atoms
            .iter()
            .filter(|a| a.position.abs() > kappa)
            .map(|a| a.weight * (big.increment(a.position) - slope * h.apply(a.position)))
            .sum()),
        LevyMeasure::AlphaStable(s) => {
            let mut total = 0.0;
            for side in Side::BOTH {
                total += stable_side_integral(s, side, h, big, slope, kappa, quad)?;
            }
            Ok(total)
        }
    }
}

/// Jump part of `G^κ` for a single measure: big jumps read from `big`, small ones
/// from the Taylor surrogate of `small`.
fn jump_functional(
    measure: &LevyMeasure,
    h: Truncation,
    big: &SampledFunction,
    small: &SampledFunction,
    kappa: f64,
    quad: &TailQuadrature,
) -> Result<f64> {
    if measure.is_zero() {
        return Ok(0.0);
    }
    let slope = small.gradient_at_zero();
    let large = big_jump_integral(measure, h, big, slope, kappa, quad)?;
    let variance = measure.small_jump_second_moment(kappa);
    let near = if variance > 0.0 {
        let d2 = small.second_derivative_at_zero().ok_or(Error::MissingSecondDerivative)?;
        0.5 * d2 * variance
    } else {
        0.0
    };
    Ok(large + near)
}

/// Classical Lévy generator of one triplet applied to `input.f`, with small
/// jumps inside `input.kappa` replaced by their Taylor surrogate.
pub fn levy_functional(triplet: &LevyTriplet, h: Truncation, input: &GeneratorInput) -> Result<f64> {
    levy_functional_with(triplet, h, input, default_quadrature())
}

pub fn levy_functional_with(
    triplet: &LevyTriplet,
    h: Truncation,
    input: &GeneratorInput,
    quad: &TailQuadrature,
) -> Result<f64> {
    check_kappa(input.kappa, h)?;
    let jumps = jump_functional(&triplet.measure, h, &input.f, &input.f, input.kappa, quad)?;
    Ok(input.p * triplet.drift + 0.5 * input.q * triplet.diffusion + jumps)
}

/// Result of a vertex-enumerated supremum.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorValue {
    pub value: f64,
    /// Id of the maximizing vertex (first one on ties).
    pub argmax: usize,
    pub argmax_params: Vec<f64>,
    pub per_vertex: Vec<f64>,
    /// Bound on the Taylor remainder of the small-jump surrogate, when the
    /// small-jump function declares a third-derivative bound.
    pub remainder_bound: Option<f64>,
}

impl GeneratorValue {
    /// Diagnostic rows `vertex,params...,value`.
    pub fn write_csv_rows<W: Write>(&self, theta: &TripletFamily, mut out: W) -> Result<()> {
        for (v, val) in theta.vertices().iter().zip(&self.per_vertex) {
            let params: Vec<String> = v.params.iter().map(|x| x.to_string()).collect();
            writeln!(out, "{},{},{}", v.id, params.join(","), val)?;
        }
        Ok(())
    }
}

/// Evaluates the affine-in-parameters functional at every vertex of `theta`.
fn enumerate_vertices(
    theta: &TripletFamily,
    p: f64,
    q: f64,
    big: &SampledFunction,
    small: &SampledFunction,
    kappa: f64,
    quad: &TailQuadrature,
) -> Result<GeneratorValue> {
    check_kappa(kappa, theta.truncation)?;
    let h = theta.truncation;
    let basis = theta.jump_basis();
    let fixed = jump_functional(&basis.fixed, h, big, small, kappa, quad)?;
    let unit: Vec<f64> =
        basis.basis.iter().map(|m| jump_functional(m, h, big, small, kappa, quad)).collect::<Result<_>>()?;
    let vertices = theta.vertices();
    let per_vertex: Vec<f64> = vertices
        .iter()
        .map(|v| {
            let jumps: f64 = unit.iter().zip(&v.params[2..]).map(|(j, c)| j * c).sum();
            p * v.params[0] + 0.5 * q * v.params[1] + fixed + jumps
        })
        .collect();
    let (argmax, value) =
        per_vertex
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, x)| if x > best.1 { (i, x) } else { best });
    let remainder_bound = small.third_derivative_bound().map(|m3| {
        vertices.iter().map(|v| m3 / 6.0 * v.triplet.measure.small_jump_third_moment(kappa)).fold(0.0, f64::max)
    });
    Ok(GeneratorValue { value, argmax, argmax_params: vertices[argmax].params.clone(), per_vertex, remainder_bound })
}

/// `G(p, q, f)` over the family, as an exact maximum over box vertices.
pub fn g_eval(theta: &TripletFamily, input: &GeneratorInput) -> Result<GeneratorValue> {
    g_eval_with(theta, input, default_quadrature())
}

pub fn g_eval_with(theta: &TripletFamily, input: &GeneratorInput, quad: &TailQuadrature) -> Result<GeneratorValue> {
    enumerate_vertices(theta, input.p, input.q, &input.f, &input.f, input.kappa, quad)
}

/// `G^κ(p, q, f, g)`: big jumps read `f`, small jumps and the compensator read `g`.
pub fn g_kappa_eval(
    theta: &TripletFamily,
    p: f64,
    q: f64,
    f: &SampledFunction,
    g: &SampledFunction,
    kappa: f64,
) -> Result<GeneratorValue> {
    enumerate_vertices(theta, p, q, f, g, kappa, default_quadrature())
}
