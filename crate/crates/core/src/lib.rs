//! Linear input-output simulation of parametrically coupled oscillator networks.
//!
//! Networks are compiled into time-independent quadratic systems, turned into
//! Langevin state-space models and analysed for scattering, gain, noise,
//! squeezing, stability and directionality.

pub mod direction;
pub mod dynamics;
pub mod error;
pub mod frames;
pub mod netmodel;
pub mod noise;
pub mod ops;
pub mod presets;
pub mod scattering;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
