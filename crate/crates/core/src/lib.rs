//! Lie–Hamilton systems on the oscillator algebra, their nonstandard
//! Poisson–Hopf deformation, constants of motion, superposition rules and a
//! numerical verification harness.

pub mod bernoulli;
pub mod deformed;
pub mod error;
pub mod ode;
pub mod oscillator;
pub mod symplectic;
pub mod systems;
pub mod twist;
pub mod verify;

pub use error::{Error, IntegrationFailureKind, Result};
pub use symplectic::{PhasePoint, ScalarField, SymplecticWeight, VectorField};
