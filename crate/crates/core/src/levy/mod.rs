//! Lévy triplets, truncation functions, parameterized families and moment functionals.

mod family;
mod measure;

pub use family::{
    family_condition_report, ConditionReport, Interval, JumpBasis, JumpFamily, TripletFamily, Vertex,
    DEFAULT_EPS_LADDER,
};
pub(crate) use measure::power_integral;
pub use measure::{Atom, LevyMeasure, LevyTriplet, Side, StableParams, Truncation};
