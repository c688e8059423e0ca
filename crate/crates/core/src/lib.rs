//! Simulation-driven search for Pareto-optimal activity batching policies.

pub mod model;
pub mod policy;
pub mod rng;
pub mod time;
pub mod sim;
pub mod analytics;
pub mod interventions;
pub mod optimizer;
pub mod pareto;
pub mod evaluation;
pub mod fixtures;
