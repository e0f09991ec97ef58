//! Shell-particle dynamics and verification diagnostics for spherically
//! symmetric Vlasov-Poisson systems, classical and relativistic.
//!
//! The crate reduces the six-dimensional phase space to `(r, w, ell)` --
//! radius, radial momentum, squared angular momentum -- discretizes compactly
//! supported initial data into weighted shells with a deterministic midpoint
//! rule, integrates the characteristic system with the self-consistent
//! repulsive field, and measures the dispersive behavior of the solution:
//! exact field norms, density norms, conserved quantities, lower-bound
//! inequality suites, terminal radial momenta, and the limiting momentum
//! profile of the scattering state.

pub mod asymptotics;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod inequalities;
pub mod phase;
pub mod profile;
pub mod runner;

pub use error::{CoreError, Result};
pub use field::Exponent;
pub use phase::{Ensemble, Model, Particle, RadialPoint};
