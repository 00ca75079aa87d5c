//! Box-parameterized families of Lévy triplets.
//!
//! A family is the image of a parameter box under a map that is affine in
//! every coordinate: drift, diffusion and (optionally) up to two jump
//! intensities. Linear functionals of the triplet therefore attain their
//! supremum over the family at a vertex of the box.

use serde::{Deserialize, Serialize};

use super::measure::{LevyMeasure, LevyTriplet, StableParams, Truncation};
use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidParameter(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Distinct endpoints: one value for a degenerate interval, two otherwise.
    pub fn endpoints(&self) -> Vec<f64> {
        if self.is_degenerate() {
            vec![self.lo]
        } else {
            vec![self.lo, self.hi]
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn lerp(&self, s: f64) -> f64 {
        self.lo + s * (self.hi - self.lo)
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum JumpFamily {
    NoJumps,
    PoissonIntensity { intensity: Interval, atom: f64 },
    StableCoefficients { alpha: f64, k_plus: Interval, k_minus: Interval },
    FixedMeasure(LevyMeasure),
}

/// The uncertainty set Θ: drift interval × diffusion interval × jump-parameter box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletFamily {
    pub drift_range: Interval,
    pub diffusion_range: Interval,
    pub jump_family: JumpFamily,
    pub truncation: Truncation,
}

/// One corner of the parameter box together with the triplet it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    pub id: usize,
    /// Box coordinates `(b, c, jump parameters...)`.
    pub params: Vec<f64>,
    pub triplet: LevyTriplet,
}

/// Linear decomposition of the jump part: `F = fixed + Σ coeff_i · basis_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpBasis {
    pub fixed: LevyMeasure,
    pub basis: Vec<LevyMeasure>,
}

impl TripletFamily {
    pub fn new(
        drift_range: Interval,
        diffusion_range: Interval,
        jump_family: JumpFamily,
        truncation: Truncation,
    ) -> Result<Self> {
        let family = Self { drift_range, diffusion_range, jump_family, truncation };
        family.validate()?;
        Ok(family)
    }

    /// Singleton family `{(b, c, F)}`.
    pub fn singleton(triplet: LevyTriplet, truncation: Truncation) -> Result<Self> {
        Self::new(
            Interval::point(triplet.drift),
            Interval::point(triplet.diffusion),
            if triplet.measure.is_zero() { JumpFamily::NoJumps } else { JumpFamily::FixedMeasure(triplet.measure) },
            truncation,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.diffusion_range.lo() < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "diffusion range must be nonnegative, got [{}, {}]",
                self.diffusion_range.lo(),
                self.diffusion_range.hi()
            )));
        }
        match &self.jump_family {
            JumpFamily::NoJumps => {}
            JumpFamily::PoissonIntensity { intensity, atom } => {
                if intensity.lo() < 0.0 {
                    return Err(Error::InvalidParameter("Poisson intensities must be nonnegative".into()));
                }
                if !(atom.is_finite() && *atom != 0.0) {
                    return Err(Error::InvalidParameter(format!("jump size must be nonzero, got {atom}")));
                }
            }
            JumpFamily::StableCoefficients { alpha, k_plus, k_minus } => {
                if k_plus.lo() < 0.0 || k_minus.lo() < 0.0 {
                    return Err(Error::InvalidParameter("stable coefficients must be nonnegative".into()));
                }
                LevyMeasure::stable(*alpha, k_plus.hi(), k_minus.hi())?;
                if self.truncation == Truncation::Identity && *alpha <= 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "the identity truncation needs α ∈ (1, 2), got α = {alpha}"
                    )));
                }
            }
            JumpFamily::FixedMeasure(m) => m.validate()?,
        }
        Ok(())
    }

    pub fn jump_basis(&self) -> JumpBasis {
        match &self.jump_family {
            JumpFamily::NoJumps => JumpBasis { fixed: LevyMeasure::Zero, basis: vec![] },
            JumpFamily::PoissonIntensity { atom, .. } => JumpBasis {
                fixed: LevyMeasure::Zero,
                basis: vec![LevyMeasure::FiniteAtomic(vec![super::measure::Atom { position: *atom, weight: 1.0 }])],
            },
            JumpFamily::StableCoefficients { alpha, .. } => JumpBasis {
                fixed: LevyMeasure::Zero,
                basis: vec![
                    LevyMeasure::AlphaStable(StableParams { alpha: *alpha, k_plus: 1.0, k_minus: 0.0 }),
                    LevyMeasure::AlphaStable(StableParams { alpha: *alpha, k_plus: 0.0, k_minus: 1.0 }),
                ],
            },
            JumpFamily::FixedMeasure(m) => JumpBasis { fixed: m.clone(), basis: vec![] },
        }
    }

    fn jump_ranges(&self) -> Vec<Interval> {
        match &self.jump_family {
            JumpFamily::NoJumps | JumpFamily::FixedMeasure(_) => vec![],
            JumpFamily::PoissonIntensity { intensity, .. } => vec![*intensity],
            JumpFamily::StableCoefficients { k_plus, k_minus, .. } => vec![*k_plus, *k_minus],
        }
    }

    /// All box coordinates, in the order `(b, c, jump parameters...)`.
    pub fn parameter_ranges(&self) -> Vec<Interval> {
        let mut ranges = vec![self.drift_range, self.diffusion_range];
        ranges.extend(self.jump_ranges());
        ranges
    }

    /// Map box coordinates to a triplet.
    pub fn triplet_at(&self, params: &[f64]) -> LevyTriplet {
        let drift = params[0];
        let diffusion = params[1];
        let measure = match &self.jump_family {
            JumpFamily::NoJumps => LevyMeasure::Zero,
            JumpFamily::PoissonIntensity { atom, .. } => {
                LevyMeasure::FiniteAtomic(vec![super::measure::Atom { position: *atom, weight: params[2] }])
            }
            JumpFamily::StableCoefficients { alpha, .. } => {
                LevyMeasure::AlphaStable(StableParams { alpha: *alpha, k_plus: params[2], k_minus: params[3] })
            }
            JumpFamily::FixedMeasure(m) => m.clone(),
        };
        LevyTriplet { drift, diffusion, measure }
    }

    /// Distinct vertices of the parameter box; degenerate coordinates contribute one value.
    pub fn vertices(&self) -> Vec<Vertex> {
        let axes: Vec<Vec<f64>> = self.parameter_ranges().iter().map(Interval::endpoints).collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; axes.len()];
        loop {
            let params: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
            let triplet = self.triplet_at(&params);
            out.push(Vertex { id: out.len(), params, triplet });
            // odometer increment
            let mut d = 0;
            loop {
                if d == axes.len() {
                    return out;
                }
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    /// Whether every triplet in the family shares the same law (single vertex).
    pub fn is_singleton(&self) -> bool {
        self.parameter_ranges().iter().all(Interval::is_degenerate)
    }

    /// Mirror image `z ↦ -z` of the family (drift negated, jumps reflected).
    pub fn mirror(&self) -> Self {
        let jump_family = match &self.jump_family {
            JumpFamily::NoJumps => JumpFamily::NoJumps,
            JumpFamily::PoissonIntensity { intensity, atom } => {
                JumpFamily::PoissonIntensity { intensity: *intensity, atom: -atom }
            }
            JumpFamily::StableCoefficients { alpha, k_plus, k_minus } => {
                JumpFamily::StableCoefficients { alpha: *alpha, k_plus: *k_minus, k_minus: *k_plus }
            }
            JumpFamily::FixedMeasure(m) => JumpFamily::FixedMeasure(m.mirror()),
        };
        Self {
            drift_range: Interval { lo: -self.drift_range.hi, hi: -self.drift_range.lo },
            diffusion_range: self.diffusion_range,
            jump_family,
            truncation: self.truncation,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let family: TripletFamily = serde_json::from_str(s)?;
        family.validate()?;
        Ok(family)
    }

    /// Stable hex digest of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let encoded = serde_json::to_string(self).expect("family serializes");
        crate::io::digest_hex(encoded.as_bytes())
    }
}

/// `𝒦` and the small-jump ladder `𝒦_ε` of a family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `sup_Θ { ∫ |z|∧|z|² F(dz) + |b| + |c| }`.
    pub k_total: f64,
    /// Vertex attaining `k_total`.
    pub k_total_vertex: usize,
    /// `(ε, sup_Θ ∫_{|z|≤ε} z² F(dz))`, sorted by ascending ε.
    pub k_eps: Vec<(f64, f64)>,
    /// Integrability condition holds (`k_total` finite).
    pub integrability_ok: bool,
    /// The ladder decreases towards zero as ε shrinks.
    pub small_jump_trend_ok: bool,
}

impl ConditionReport {
    pub fn passes(&self) -> bool {
        self.integrability_ok && self.small_jump_trend_ok
    }

    pub fn table(&self) -> String {
        let mut s = format!("K = {:.6e}\n", self.k_total);
        for (eps, k) in &self.k_eps {
            s.push_str(&format!("K_eps({eps:.3e}) = {k:.6e}\n"));
        }
        s
    }

    /// Turns a failing report into [`Error::ConditionViolation`] carrying the table.
    pub fn ensure(&self) -> Result<()> {
        if self.passes() {
            Ok(())
        } else {
            Err(Error::ConditionViolation(self.table()))
        }
    }
}

/// Default radius ladder used when a caller needs the `𝒦_ε` table without choosing one.
pub const DEFAULT_EPS_LADDER: [f64; 5] = [1.0, 0.1, 1e-2, 1e-3, 1e-4];

/// Compute `𝒦` and `𝒦_ε` over the family by vertex enumeration.
///
/// Both per-triplet quantities are nondecreasing in every intensity
/// parameter and in `|b|`, `c`, so the supremum sits at a vertex.
pub fn family_condition_report(theta: &TripletFamily, eps_list: &[f64]) -> Result<ConditionReport> {
    theta.validate()?;
    let mut eps_sorted: Vec<f64> = eps_list.to_vec();
    if eps_sorted.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter("radii must be positive".into()));
    }
    eps_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let vertices = theta.vertices();
    let mut k_total = f64::NEG_INFINITY;
    let mut k_total_vertex = 0;
    for v in &vertices {
        let t = &v.triplet;
        let k = t.measure.truncated_first_second_moment()? + t.drift.abs() + t.diffusion.abs();
        if k > k_total {
            k_total = k;
            k_total_vertex = v.id;
        }
    }
    let k_eps: Vec<(f64, f64)> = eps_sorted
        .iter()
        .map(|&eps| {
            let sup = vertices.iter().map(|v| v.triplet.measure.small_jump_second_moment(eps)).fold(0.0, f64::max);
            (eps, sup)
        })
        .collect();

    let monotone = k_eps.windows(2).all(|w| w[0].1 <= w[1].1 * (1.0 + 1e-12));
    let vanishing = match (k_eps.first(), k_eps.last()) {
        (Some(first), Some(last)) if k_eps.len() > 1 => first.1 == 0.0 || first.1 < last.1,
        _ => true,
    };
    Ok(ConditionReport {
        k_total,
        k_total_vertex,
        k_eps,
        integrability_ok: k_total.is_finite(),
        small_jump_trend_ok: monotone && vanishing,
    })
}
