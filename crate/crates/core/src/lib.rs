//! Decentralized optimization with locally adaptive primal and dual
//! stepsizes, its baselines, merit diagnostics and an experiment harness.

pub mod algorithms;
pub mod backtracking;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod topology;
