//! Location obfuscation for spatial crowdsourcing: partition a discrete
//! location domain into protection sets, perturb reported locations with an
//! exponential mechanism, and search for partitions trading quality loss
//! against adversarial inference error.

pub mod adversary;
pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod grid;
pub mod mechanism;
pub mod moea;
pub mod pls;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
