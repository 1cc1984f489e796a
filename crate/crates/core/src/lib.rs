//! Gaussian mechanisms with bounded output support (rectified, truncated and
//! stochastic sign) and the plain Gaussian baseline.
//!
//! Closed-form per-instance Rényi divergences live in [`rdp`] and Fisher
//! information loss in [`fil`]; both are checked against brute-force
//! references in [`oracles`]. [`accountant`] composes them over gradient
//! releases, and [`experiments`] drives the curve and mean estimation studies.

pub mod accountant;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fil;
pub mod format;
pub mod mechanisms;
pub mod numerics;
pub mod oracles;
pub mod rdp;

pub use error::{Error, Result};
