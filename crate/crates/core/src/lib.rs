//! Numerical laboratory for exponential decay of solutions to fifth-order
//! dispersive equations `∂_t u − ∂_x⁵ u + P(u, ∂_x u, ∂_x² u, ∂_x³ u) = 0`.

pub mod certifier;
pub mod cli;
pub mod config;
pub mod decaylab;
pub mod error;
pub mod fit;
pub mod jet;
pub mod kernel;
pub mod quadrature;
pub mod solver;
pub mod weights;

pub use error::{Error, Result};
