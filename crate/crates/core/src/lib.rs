//! Channel modeling and estimation for RIS-aided terahertz uplinks.
//!
//! The crate covers mixture-Gamma fading, ring-of-scatterers spatial
//! correlation in the near and far field, dipole mutual coupling, Kronecker
//! channel synthesis, and LS/LMMSE estimation of the cascaded channel with
//! DFT training. The `thz-ris` binary wraps these in a Monte-Carlo runner.

pub mod channel;
pub mod config;
pub mod correlation;
pub mod coupling;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod linalg;
pub mod mgdist;
pub mod presets;
pub mod report;
pub mod runner;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
