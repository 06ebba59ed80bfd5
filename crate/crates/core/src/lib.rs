//! Numerical toolkit for the one- and two-photon Dicke models: exact diagonalization with
//! convergence control, classical chaos maps, spectral-ratio statistics, Husimi-based
//! phase-space overlap indices, and the scaling of the mixed-eigenstate fraction.

pub mod classical;
pub mod error;
pub mod husimi;
pub mod linalg;
pub mod mixed;
pub mod model;
pub mod spectral;

pub use error::{Error, Result};
