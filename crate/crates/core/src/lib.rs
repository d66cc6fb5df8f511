//! Martingale-optimal-transport pricing and robust semi-static hedging on
//! crossing-time discretizations.

pub mod discretize;
pub mod error;
pub mod hedging;
pub mod lifting;
pub mod mot;
pub mod lp;
pub mod marginals;
pub mod payoffs;
pub mod paths;
pub mod rng;

pub use error::{MotError, Result};
