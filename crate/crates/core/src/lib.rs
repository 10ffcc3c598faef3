//! Barrier-function shielding for multi-agent POMDPs against linear
//! distribution temporal logic specifications.

pub mod barrier;
pub mod ldtl;
pub mod model;
pub mod monitor;
pub mod shield;
pub mod sim;
pub mod trace;
pub mod config;
pub mod scenarios;
pub mod audit;
pub mod sweep;
pub mod cli;
