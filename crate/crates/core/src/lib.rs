//! Spectral gaps of periodic media perforated by Helmholtz-type resonators.
//!
//! * [`limit`] evaluates the small-scale limit of the spectrum: gap
//!   endpoints `alpha_j` and `beta_j` of a resonator model.
//! * [`design`] inverts that map, producing a concrete 2D cell geometry
//!   whose limit gaps are prescribed.
//! * [`bands`] checks the limit numerically with a finite-difference
//!   Floquet-Bloch solver.

pub mod bands;
pub mod design;
pub mod error;
pub mod geometry;
pub mod io;
pub mod limit;

pub use error::{Error, Result};
