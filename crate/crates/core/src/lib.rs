//! Pseudospectral toolkit for the 3D incompressible Euler equations with
//! renormalized Mori-Zwanzig reduced order models.

pub mod diagnostics;
pub mod error;
pub mod integrator;
pub mod pipeline;
pub mod renormalization;
pub mod rom;
pub mod spectral;

pub use error::{Error, Result};
