//! Exact Bayesian-incentive-compatible exploration for multi-agent games.

pub mod audit;
pub mod cli;
pub mod error;
pub mod explore;
pub mod game;
pub mod harness;
pub mod instances;
pub mod lp;
pub mod policy;
pub mod rational;
pub mod scenario;
pub mod signal;

pub use error::{Error, Result};
pub use game::{JointAction, NoiseModel, UtilityStructure};
pub use rational::Q;
pub use signal::{SignalStructure, SignalValue};
