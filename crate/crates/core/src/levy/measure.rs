//! Lévy measures in one dimension and their moment functionals.
//!
//! Every functional here has a closed form. The stable density
//! `(k₋ 1_{z<0} + k₊ 1_{z>0}) |z|^{-α-1}` integrates against powers of `|z|`
//! explicitly, and atomic measures reduce to finite sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Truncation function `h` splitting jumps into compensated and raw parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// `h(z) = z · 1_{|z| ≤ 1}`.
    Canonical,
    /// `h(z) = z · 1_{|z| < 1}`. Differs from `Canonical` only on `|z| = 1`,
    /// which matters for measures with atoms at ±1 (e.g. uncompensated Poisson).
    CanonicalOpen,
    /// `h(z) = z`. Needs `∫_{|z|>1} |z| F(dz) < ∞`.
    Identity,
}

impl Truncation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Truncation::Canonical if z.abs() <= 1.0 => z,
            Truncation::CanonicalOpen if z.abs() < 1.0 => z,
            Truncation::Identity => z,
            _ => 0.0,
        }
    }

    pub fn is_bounded(self) -> bool {
        !matches!(self, Truncation::Identity)
    }

    /// Whether `h(z) = z` holds on the closed ball `{|z| ≤ radius}`.
    pub fn is_linear_on(self, radius: f64) -> bool {
        match self {
            Truncation::Canonical => radius <= 1.0,
            Truncation::CanonicalOpen => radius < 1.0,
            Truncation::Identity => true,
        }
    }
}

/// A point mass `weight · δ_position`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub weight: f64,
}

/// Parameters of the α-stable Lévy density `(k₋ 1_{z<0} + k₊ 1_{z>0}) |z|^{-α-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub k_plus: f64,
    pub k_minus: f64,
}

impl StableParams {
    fn weight(&self, side: Side) -> f64 {
        match side {
            Side::Positive => self.k_plus,
            Side::Negative => self.k_minus,
        }
    }
}

/// Half-line of the jump axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Positive,
    Negative,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Positive, Side::Negative];

    pub fn sign(self) -> f64 {
        match self {
            Side::Positive => 1.0,
            Side::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum LevyMeasure {
    Zero,
    FiniteAtomic(Vec<Atom>),
    AlphaStable(StableParams),
}

/// `∫_a^b z^{p} dz` for `0 < a ≤ b ≤ ∞`, `p` real. Returns `None` when divergent.
pub(crate) fn power_integral(p: f64, a: f64, b: f64) -> Option<f64> {
    debug_assert!(a > 0.0 && b >= a);
    if a == b {
        return Some(0.0);
    }
    let q = p + 1.0;
    if q.abs() < 1e-14 {
        return if b.is_finite() { Some((b / a).ln()) } else { None };
    }
    if b.is_infinite() {
        return if q < 0.0 { Some(-a.powf(q) / q) } else { None };
    }
    Some((b.powf(q) - a.powf(q)) / q)
}

impl LevyMeasure {
    pub fn atomic(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let atoms: Vec<Atom> = atoms.into_iter().map(|(position, weight)| Atom { position, weight }).collect();
        let m = LevyMeasure::FiniteAtomic(atoms);
        m.validate()?;
        Ok(m)
    }

    pub fn stable(alpha: f64, k_plus: f64, k_minus: f64) -> Result<Self> {
        let m = LevyMeasure::AlphaStable(StableParams { alpha, k_plus, k_minus });
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LevyMeasure::Zero => Ok(()),
            LevyMeasure::FiniteAtomic(atoms) => {
                for a in atoms {
                    if !(a.position.is_finite() && a.position != 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "atom position must be finite and nonzero, got {}",
                            a.position
                        )));
                    }
                    if !(a.weight.is_finite() && a.weight >= 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "atom weight must be finite and nonnegative, got {}",
                            a.weight
                        )));
                    }
                }
                Ok(())
            }
            LevyMeasure::AlphaStable(s) => {
                if !(s.alpha > 0.0 && s.alpha < 2.0) {
                    return Err(Error::InvalidParameter(format!(
                        "stability index must lie in (0, 2), got {}",
                        s.alpha
                    )));
                }
                if !(s.k_plus.is_finite() && s.k_plus >= 0.0 && s.k_minus.is_finite() && s.k_minus >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "stable coefficients must be finite and nonnegative, got k+={} k-={}",
                        s.k_plus, s.k_minus
                    )));
                }
                Ok(())
            }
        }
    }

    /// Reflection `z ↦ -z` of the measure.
    pub fn mirror(&self) -> Self {
        match self {
            LevyMeasure::Zero => LevyMeasure::Zero,
            LevyMeasure::FiniteAtomic(atoms) => LevyMeasure::FiniteAtomic(
                atoms.iter().map(|a| Atom { position: -a.position, weight: a.weight }).collect(),
            ),
            LevyMeasure::AlphaStable(s) => {
                LevyMeasure::AlphaStable(StableParams { alpha: s.alpha, k_plus: s.k_minus, k_minus: s.k_plus })
            }
        }
    }

    /// Multiply the measure by `factor ≥ 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            LevyMeasure::Zero => LevyMeasure::Zero,
            LevyMeasure::FiniteAtomic(atoms) => LevyMeasure::FiniteAtomic(
                atoms.iter().map(|a| Atom { position: a.position, weight: a.weight * factor }).collect(),
            ),
            LevyMeasure::AlphaStable(s) => LevyMeasure::AlphaStable(StableParams {
                alpha: s.alpha,
                k_plus: s.k_plus * factor,
                k_minus: s.k_minus * factor,
            }),
        }
    }

    /// `∫_{a < |z| ≤ b, z on side} |z|^p F(dz)` with `0 < a ≤ b ≤ ∞`.
    ///
    /// For the stable density this is `k_side · ∫_a^b z^{p-α-1} dz`.
    pub fn side_power_moment(&self, side: Side, p: f64, a: f64, b: f64) -> Result<f64> {
        match self {
            LevyMeasure::Zero => Ok(0.0),
            LevyMeasure::FiniteAtomic(atoms) => Ok(atoms
                .iter()
                .filter(|at| at.position * side.sign() > 0.0)
                .filter(|at| {
                    let r = at.position.abs();
                    r > a && r <= b
                })
                .map(|at| at.weight * at.position.abs().powf(p))
                .sum()),
            LevyMeasure::AlphaStable(s) => {
                let k = s.weight(side);
                if k == 0.0 {
                    return Ok(0.0);
                }
                power_integral(p - s.alpha - 1.0, a, b).map(|v| k * v).ok_or_else(|| {
                    Error::DivergentMoment(format!("∫ |z|^{p} F(dz) over ({a}, {b}] diverges for α = {}", s.alpha))
                })
            }
        }
    }

    /// `∫_{|z| ≤ ε} z² F(dz)`: the small-jump variance at radius `ε`.
    pub fn small_jump_second_moment(&self, eps: f64) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::FiniteAtomic(atoms) => {
                atoms.iter().filter(|a| a.position.abs() <= eps).map(|a| a.weight * a.position * a.position).sum()
            }
            LevyMeasure::AlphaStable(s) => (s.k_plus + s.k_minus) * eps.powf(2.0 - s.alpha) / (2.0 - s.alpha),
        }
    }

    /// `∫_{|z| ≤ ε} |z|³ F(dz)`; controls the Taylor remainder of the small-jump surrogate.
    pub fn small_jump_third_moment(&self, eps: f64) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::FiniteAtomic(atoms) => {
                atoms.iter().filter(|a| a.position.abs() <= eps).map(|a| a.weight * a.position.abs().powi(3)).sum()
            }
            LevyMeasure::AlphaStable(s) => (s.k_plus + s.k_minus) * eps.powf(3.0 - s.alpha) / (3.0 - s.alpha),
        }
    }

    /// `∫ |z| ∧ |z|² F(dz)`.
    pub fn truncated_first_second_moment(&self) -> Result<f64> {
        match self {
            LevyMeasure::Zero => Ok(0.0),
            LevyMeasure::FiniteAtomic(atoms) => Ok(atoms
                .iter()
                .map(|a| {
                    let r = a.position.abs();
                    a.weight * r.min(r * r)
                })
                .sum()),
            LevyMeasure::AlphaStable(s) => {
                let k = s.k_plus + s.k_minus;
                if k == 0.0 {
                    return Ok(0.0);
                }
                if s.alpha <= 1.0 {
                    return Err(Error::DivergentMoment(format!(
                        "∫_{{|z|>1}} |z| F(dz) diverges for α = {} ≤ 1",
                        s.alpha
                    )));
                }
                Ok(k * (1.0 / (2.0 - s.alpha) + 1.0 / (s.alpha - 1.0)))
            }
        }
    }

    /// `F({|z| > ε})`.
    pub fn tail_intensity(&self, eps: f64) -> f64 {
        match self {
            LevyMeasure::Zero => 0.0,
            LevyMeasure::FiniteAtomic(atoms) => atoms.iter().filter(|a| a.position.abs() > eps).map(|a| a.weight).sum(),
            LevyMeasure::AlphaStable(s) => (s.k_plus + s.k_minus) * eps.powf(-s.alpha) / s.alpha,
        }
    }

    /// One-sided tail mass `F({z on side, |z| > ε})`.
    pub fn side_tail_intensity(&self, side: Side, eps: f64) -> f64 {
        match self {
            LevyMeasure::AlphaStable(s) => s.weight(side) * eps.powf(-s.alpha) / s.alpha,
            other => other.side_power_moment(side, 0.0, eps, f64::INFINITY).unwrap_or(0.0),
        }
    }

    /// `∫_{|z| > ε} h(z) F(dz)`, the drift correction that recenters big jumps.
    pub fn compensator_drift(&self, h: Truncation, eps: f64) -> Result<f64> {
        match self {
            LevyMeasure::Zero => Ok(0.0),
            LevyMeasure::FiniteAtomic(atoms) => {
                Ok(atoms.iter().filter(|a| a.position.abs() > eps).map(|a| a.weight * h.apply(a.position)).sum())
            }
            LevyMeasure::AlphaStable(s) => {
                let upper = match h {
                    Truncation::Canonical | Truncation::CanonicalOpen => 1.0,
                    Truncation::Identity => f64::INFINITY,
                };
                if eps >= upper {
                    return Ok(0.0);
                }
                let net = s.k_plus - s.k_minus;
                let total = s.k_plus + s.k_minus;
                if total == 0.0 {
                    return Ok(0.0);
                }
                match power_integral(-s.alpha, eps, upper) {
                    Some(v) => Ok(net * v),
                    None => Err(Error::DivergentMoment(format!(
                        "∫_{{|z|>{eps}}} z F(dz) diverges for α = {} with the identity truncation",
                        s.alpha
                    ))),
                }
            }
        }
    }

    /// Whether the measure puts mass on `{0 < |z| ≤ ε}`.
    pub fn charges_ball(&self, eps: f64) -> bool {
        match self {
            LevyMeasure::Zero => false,
            LevyMeasure::FiniteAtomic(atoms) => atoms.iter().any(|a| a.weight > 0.0 && a.position.abs() <= eps),
            LevyMeasure::AlphaStable(s) => s.k_plus + s.k_minus > 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            LevyMeasure::Zero => true,
            LevyMeasure::FiniteAtomic(atoms) => atoms.iter().all(|a| a.weight == 0.0),
            LevyMeasure::AlphaStable(s) => s.k_plus + s.k_minus == 0.0,
        }
    }
}

/// A Lévy triplet `(b, c, F)` in dimension one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyTriplet {
    pub drift: f64,
    pub diffusion: f64,
    pub measure: LevyMeasure,
}

impl LevyTriplet {
    pub fn new(drift: f64, diffusion: f64, measure: LevyMeasure) -> Result<Self> {
        if !drift.is_finite() {
            return Err(Error::InvalidParameter(format!("drift must be finite, got {drift}")));
        }
        if !(diffusion.is_finite() && diffusion >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "diffusion coefficient must be finite and nonnegative, got {diffusion}"
            )));
        }
        measure.validate()?;
        Ok(Self { drift, diffusion, measure })
    }

    pub fn drift_only(drift: f64) -> Self {
        Self { drift, diffusion: 0.0, measure: LevyMeasure::Zero }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn small_jump_second_moment_examples() {
        let s = LevyMeasure::stable(1.5, 1.0, 1.0).unwrap();
        assert!(close(s.small_jump_second_moment(1.0), 4.0, 1e-14));
        let a = LevyMeasure::atomic([(1.0, 2.0)]).unwrap();
        assert_eq!(a.small_jump_second_moment(0.5), 0.0);
        assert_eq!(LevyMeasure::Zero.small_jump_second_moment(3.0), 0.0);
    }

    #[test]
    fn truncated_moment_examples() {
        let s = LevyMeasure::stable(1.5, 1.0, 1.0).unwrap();
        assert!(close(s.truncated_first_second_moment().unwrap(), 8.0, 1e-14));
        let a = LevyMeasure::atomic([(0.5, 4.0)]).unwrap();
        assert!(close(a.truncated_first_second_moment().unwrap(), 1.0, 1e-15));
        let d = LevyMeasure::stable(0.5, 1.0, 0.0).unwrap();
        assert!(matches!(d.truncated_first_second_moment(), Err(Error::DivergentMoment(_))));
    }

    #[test]
    fn tail_intensity_examples() {
        let s = LevyMeasure::stable(1.5, 1.0, 1.0).unwrap();
        assert!(close(s.tail_intensity(1.0), 4.0 / 3.0, 1e-14));
        let a = LevyMeasure::atomic([(1.0, 2.0)]).unwrap();
        assert_eq!(a.tail_intensity(0.5), 2.0);
        assert_eq!(a.tail_intensity(2.0), 0.0);
    }

    #[test]
    fn compensator_drift_examples() {
        let s = LevyMeasure::stable(1.5, 1.0, 1.0).unwrap();
        assert_eq!(s.compensator_drift(Truncation::Canonical, 0.1).unwrap(), 0.0);
        let a = LevyMeasure::atomic([(1.0, 2.0)]).unwrap();
        assert_eq!(a.compensator_drift(Truncation::Canonical, 0.5).unwrap(), 2.0);
        assert_eq!(a.compensator_drift(Truncation::CanonicalOpen, 0.5).unwrap(), 0.0);
        let one_sided = LevyMeasure::stable(1.5, 1.0, 0.0).unwrap();
        assert!(close(one_sided.compensator_drift(Truncation::Identity, 1.0).unwrap(), 2.0, 1e-14));
        let heavy = LevyMeasure::stable(0.8, 1.0, 0.0).unwrap();
        assert!(matches!(heavy.compensator_drift(Truncation::Identity, 1.0), Err(Error::DivergentMoment(_))));
    }

    #[test]
    fn truncation_variants() {
        for h in [Truncation::Canonical, Truncation::CanonicalOpen, Truncation::Identity] {
            for z in [-0.3, 1e-9, 0.7] {
                assert_eq!(h.apply(z), z);
            }
        }
        assert_eq!(Truncation::Canonical.apply(1.0), 1.0);
        assert_eq!(Truncation::CanonicalOpen.apply(1.0), 0.0);
        assert_eq!(Truncation::Canonical.apply(-3.0), 0.0);
        assert_eq!(Truncation::Identity.apply(-3.0), -3.0);
        assert!(Truncation::Canonical.is_bounded());
        assert!(!Truncation::Identity.is_bounded());
    }

    #[test]
    fn rejects_invalid_measures() {
        assert!(LevyMeasure::atomic([(0.0, 1.0)]).is_err());
        assert!(LevyMeasure::atomic([(1.0, -1.0)]).is_err());
        assert!(LevyMeasure::stable(2.0, 1.0, 1.0).is_err());
        assert!(LevyMeasure::stable(1.2, -1.0, 1.0).is_err());
        assert!(LevyTriplet::new(0.0, -0.1, LevyMeasure::Zero).is_err());
    }

    #[test]
    fn atomic_mass_partition() {
        let a = LevyMeasure::atomic([(0.2, 1.5), (-0.7, 0.25), (2.0, 3.0), (-0.1, 0.5)]).unwrap();
        let total = 1.5 + 0.25 + 3.0 + 0.5;
        for eps in [0.05, 0.1, 0.2, 0.5, 0.7, 1.0, 3.0] {
            let inside: f64 = match &a {
                LevyMeasure::FiniteAtomic(atoms) => {
                    atoms.iter().filter(|x| x.position.abs() <= eps).map(|x| x.weight).sum()
                }
                _ => unreachable!(),
            };
            assert_eq!(a.tail_intensity(eps) + inside, total);
        }
    }

    #[test]
    fn side_power_moment_matches_totals() {
        let s = LevyMeasure::stable(1.3, 0.7, 0.2).unwrap();
        let both: f64 = Side::BOTH.iter().map(|&side| s.side_power_moment(side, 2.0, 1e-300, 0.4).unwrap()).sum();
        assert!(close(both, s.small_jump_second_moment(0.4), 1e-12));
        let tails: f64 = Side::BOTH.iter().map(|&side| s.side_tail_intensity(side, 0.3)).sum();
        assert!(close(tails, s.tail_intensity(0.3), 1e-14));
    }
}
