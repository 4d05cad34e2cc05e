//! Petz monotone metrics, support-projected curvature and natural-gradient VQE on
//! one-qubit reductions of two-qubit variational circuits.
#![forbid(unsafe_code)]

pub mod curvature;
pub mod error;
pub mod geometry;
pub mod hea;
pub mod linops;
pub mod noise;
pub mod petz;
pub mod pipeline;
pub mod sldcore;
pub mod support;
pub mod vqe;

pub use error::{QigError, Result};
