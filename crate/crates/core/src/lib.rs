//! Monte Carlo simulator for hierarchical carrier-frequency-offset
//! synchronization in distributed massive MIMO-OFDMA uplinks.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod ofdm;
pub mod quad;
pub mod scenario;
pub mod seed;
pub mod selftest;
pub mod sync;

pub use config::SystemConfig;
pub use error::{Error, Result};
