//! Numerical engine for nonlinear Lévy processes.
//!
//! A nonlinear Lévy process is described by a set Θ of Lévy triplets. Its
//! value function `v(t, x) = sup_P E^P[ψ(x + X_t)]` is computed two ways:
//! by an explicit monotone scheme for the Kolmogorov equation
//! `∂_t v = G(∂_x v, ∂_xx v, v(t, x + ·))` ([`solver`]) and by Monte Carlo
//! over piecewise-constant controls with values in Θ ([`sim`]).
//!
//! ```
//! use nonlinear_levy::levy::{Interval, JumpFamily, Truncation, TripletFamily};
//! use nonlinear_levy::generator::{g_eval, GeneratorInput, SampledFunction};
//!
//! let theta = TripletFamily::new(
//!     Interval::point(0.0),
//!     Interval::new(1.0, 2.0)?,
//!     JumpFamily::NoJumps,
//!     Truncation::Canonical,
//! )?;
//! let f = SampledFunction::analytic(|z: f64| z.tanh(), 1.0, 1.0);
//! let g = g_eval(&theta, &GeneratorInput::new(0.0, 3.0, f))?;
//! assert_eq!(g.value, 3.0);
//! # Ok::<(), nonlinear_levy::Error>(())
//! ```

pub mod error;
pub mod generator;
pub mod io;
pub mod levy;
pub mod quad;
pub mod sim;
pub mod solver;
pub mod stats;
pub mod validation;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/uncertainty_sets.md")]
    pub mod uncertainty_sets {}
    #[doc = include_str!("../../../book/src/generator.md")]
    pub mod generator {}
    #[doc = include_str!("../../../book/src/solver.md")]
    pub mod solver {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    pub mod simulation {}
    #[doc = include_str!("../../../book/src/validation.md")]
    pub mod validation {}
}
