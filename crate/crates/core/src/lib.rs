//! Mobile nudging data assimilation for the 2D periodic Navier–Stokes
//! equations in vorticity form.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod integrator;
pub mod movement;
pub mod nudging;
pub mod spectral;
pub mod theory;
pub mod window;

#[doc(hidden)]
pub mod testing;

pub use error::{Error, Result};
pub use spectral::{CoarseGrid, GridField, SpectralField, SpectralOps};
pub use window::Window;
