use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type Callback = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Piecewise-linear function on a uniform grid, read relative to `origin`.
///
/// `value(z)` interpolates at `origin + z`, with constant extrapolation
/// beyond the first and last node.
#[derive(Debug, Clone)]
pub struct GridFunction {
    x_min: f64,
    dx: f64,
    values: Arc<[f64]>,
    origin: f64,
}

impl GridFunction {
    pub fn new(x_min: f64, dx: f64, values: impl Into<Arc<[f64]>>) -> Result<Self> {
        let values = values.into();
        if values.len() < 2 || !(dx > 0.0) {
            return Err(Error::InvalidParameter("grid needs at least two nodes and dx > 0".into()));
        }
        Ok(Self { x_min, dx, values, origin: 0.0 })
    }

    /// Same data read around a new origin.
    pub fn translated(&self, origin: f64) -> Self {
        Self { origin, ..self.clone() }
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + self.dx * (self.values.len() - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated value at absolute position `x`.
    pub fn at(&self, x: f64) -> f64 {
        let n = self.values.len();
        let s = (x - self.x_min) / self.dx;
        if !(s > 0.0) {
            return self.values[0];
        }
        if s >= (n - 1) as f64 {
            return self.values[n - 1];
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        if w == 0.0 {
            self.values[i]
        } else {
            self.values[i] * (1.0 - w) + self.values[i + 1] * w
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        self.at(self.origin + z)
    }
}

#[derive(Clone)]
pub(crate) enum Source {
    Analytic { f: Callback, kinks: Vec<f64> },
    Grid(GridFunction),
}

/// A bounded test function with its value, gradient and curvature at the origin.
///
/// This is the `f(·)` slot of the generator: the integrand is always read
/// relative to `z = 0`.
#[derive(Clone)]
pub struct SampledFunction {
    pub(crate) source: Source,
    /// Value of the source at `0`, before `shift`.
    raw_zero: f64,
    /// Constant added on top of the source; kept apart so increments cancel it exactly.
    shift: f64,
    gradient_at_zero: f64,
    second_derivative_at_zero: Option<f64>,
    third_derivative_bound: Option<f64>,
    bound: f64,
    /// Dominates `|f(z) − f(0)|`; unlike `bound` it ignores constant shifts.
    oscillation: f64,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.source {
            Source::Analytic { .. } => "analytic",
            Source::Grid(_) => "grid",
        };
        f.debug_struct("SampledFunction")
            .field("source", &kind)
            .field("value_at_zero", &self.value_at_zero())
            .field("gradient_at_zero", &self.gradient_at_zero)
            .field("second_derivative_at_zero", &self.second_derivative_at_zero)
            .field("bound", &self.bound)
            .finish()
    }
}

impl SampledFunction {
    /// Analytic test function. `bound` must dominate `|f|` everywhere.
    pub fn analytic<F>(f: F, bound: f64, gradient_at_zero: f64) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let raw_zero = f(0.0);
        Self {
            source: Source::Analytic { f: Arc::new(f), kinks: Vec::new() },
            raw_zero,
            shift: 0.0,
            gradient_at_zero,
            second_derivative_at_zero: None,
            third_derivative_bound: None,
            bound,
            oscillation: 2.0 * bound,
        }
    }

    /// Grid-backed function read around `grid.origin()`.
    pub fn from_grid(grid: GridFunction, gradient_at_zero: f64, second_derivative_at_zero: Option<f64>) -> Self {
        let bound = grid.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let f0 = grid.value(0.0);
        let oscillation = grid.values().iter().fold(0.0f64, |m, v| m.max((v - f0).abs()));
        Self {
            oscillation,
            raw_zero: f0,
            shift: 0.0,
            source: Source::Grid(grid),
            gradient_at_zero,
            second_derivative_at_zero,
            third_derivative_bound: None,
            bound,
        }
    }

    pub fn with_second_derivative(mut self, d2: f64) -> Self {
        self.second_derivative_at_zero = Some(d2);
        self
    }

    pub fn with_third_derivative_bound(mut self, m3: f64) -> Self {
        self.third_derivative_bound = Some(m3);
        self
    }

    /// Points where the function is not smooth; quadrature panels break there.
    pub fn with_kinks(mut self, kinks: impl IntoIterator<Item = f64>) -> Self {
        if let Source::Analytic { kinks: k, .. } = &mut self.source {
            k.extend(kinks);
        }
        self
    }

    fn raw(&self, z: f64) -> f64 {
        match &self.source {
            Source::Analytic { f, .. } => f(z),
            Source::Grid(g) => g.value(z),
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        self.raw(z) + self.shift
    }

    pub fn value_at_zero(&self) -> f64 {
        self.raw_zero + self.shift
    }

    /// `f(z) − f(0)`, bit-identical for every constant shift of `f`.
    pub fn increment(&self, z: f64) -> f64 {
        self.raw(z) - self.raw_zero
    }

    /// `f(0)` of the unshifted source; pairs with the raw grid values.
    pub(crate) fn raw_zero(&self) -> f64 {
        self.raw_zero
    }

    pub fn gradient_at_zero(&self) -> f64 {
        self.gradient_at_zero
    }

    pub fn second_derivative_at_zero(&self) -> Option<f64> {
        self.second_derivative_at_zero
    }

    pub fn third_derivative_bound(&self) -> Option<f64> {
        self.third_derivative_bound
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn oscillation(&self) -> f64 {
        self.oscillation
    }

    pub(crate) fn kinks(&self) -> &[f64] {
        match &self.source {
            Source::Analytic { kinks, .. } => kinks,
            Source::Grid(_) => &[],
        }
    }

    /// `f + c`.
    pub fn plus_constant(&self, c: f64) -> Self {
        Self { shift: self.shift + c, bound: self.bound + c.abs(), ..self.clone() }
    }

    /// `z ↦ f(s z)`.
    pub fn dilated(&self, s: f64) -> Self {
        let inner = self.clone();
        let kinks = self.kinks().iter().map(|k| k / s).collect::<Vec<_>>();
        Self {
            source: Source::Analytic { f: Arc::new(move |z| inner.value(s * z)), kinks },
            raw_zero: self.value_at_zero(),
            shift: 0.0,
            gradient_at_zero: s * self.gradient_at_zero,
            second_derivative_at_zero: self.second_derivative_at_zero.map(|d| s * s * d),
            third_derivative_bound: self.third_derivative_bound.map(|m| m * s.abs().powi(3)),
            bound: self.bound,
            oscillation: self.oscillation,
        }
    }

    /// Pointwise sum `f + g`.
    pub fn sum(&self, other: &SampledFunction) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let mut kinks = self.kinks().to_vec();
        kinks.extend_from_slice(other.kinks());
        Self {
            source: Source::Analytic { f: Arc::new(move |z| a.value(z) + b.value(z)), kinks },
            raw_zero: self.value_at_zero() + other.value_at_zero(),
            shift: 0.0,
            gradient_at_zero: self.gradient_at_zero + other.gradient_at_zero,
            second_derivative_at_zero: match (self.second_derivative_at_zero, other.second_derivative_at_zero) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            },
            third_derivative_bound: match (self.third_derivative_bound, other.third_derivative_bound) {
                (Some(x), Some(y)) => Some(x + y),
                _ => None,
            },
            bound: self.bound + other.bound,
            oscillation: self.oscillation + other.oscillation,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_interpolation_and_extrapolation() {
        let g = GridFunction::new(-1.0, 0.5, vec![0.0, 1.0, 3.0, 2.0, 2.0]).unwrap();
        assert_eq!(g.at(-1.0), 0.0);
        assert_eq!(g.at(-0.75), 0.5);
        assert_eq!(g.at(0.25), 2.5);
        assert_eq!(g.at(-10.0), 0.0);
        assert_eq!(g.at(10.0), 2.0);
        let t = g.translated(0.5);
        assert_eq!(t.value(-0.5), 3.0);
        let f = SampledFunction::from_grid(t, 0.0, None);
        assert_eq!(f.value_at_zero(), 2.0);
        assert_eq!(f.bound(), 3.0);
    }

    #[test]
    fn combinators_track_derivatives() {
        let f = SampledFunction::analytic(|z: f64| z.tanh(), 1.0, 1.0)
            .with_second_derivative(0.0)
            .with_third_derivative_bound(2.0);
        let d = f.dilated(2.0);
        assert_eq!(d.gradient_at_zero(), 2.0);
        assert_eq!(d.third_derivative_bound(), Some(16.0));
        assert_eq!(d.value(0.5), 1f64.tanh());
        let s = f.sum(&d).plus_constant(3.0);
        assert_eq!(s.value_at_zero(), 3.0);
        assert_eq!(s.gradient_at_zero(), 3.0);
        assert_eq!(s.bound(), 5.0);
    }
}
