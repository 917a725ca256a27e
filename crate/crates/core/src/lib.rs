//! Porous medium model with slow reservoirs.
//!
//! * [`model`]: configurations, rates and the generator.
//! * [`engine`]: exact continuous-time simulation with observers.
//! * [`pde`]: explicit solver for `∂t ρ = Δ(ρ²)` with Dirichlet or Robin conditions.
//! * [`analysis`]: microscopic observables, Dynkin martingales, blocked
//!   configurations and mobile-cluster transport paths.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod harness;
pub mod model;
pub mod pde;

pub use error::{Error, Result};
pub use model::{Configuration, Constraint, Dynamics, ModelParams, Transition, TransitionKind};
