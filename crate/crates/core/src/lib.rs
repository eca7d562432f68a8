//! Multi-objective recommender training with stochastic multi-gradient
//! descent and gradient normalization.

pub mod cli;
pub mod data;
pub mod error;
pub mod moo;
pub mod model;
pub mod metrics;
pub mod qcop;
pub mod run;
pub mod selection;
pub mod trainer;

pub use error::{Error, Result};
