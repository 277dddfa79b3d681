//! Action-manipulation attacks on continuous-control reinforcement learning.
//!
//! The crate provides three environments with white-box model access, two
//! built-in learning agents, a white-box oracle attacker backed by a grid
//! planner, the black-box LCBT attacker (per-step action cover trees with
//! lower-confidence-bound node selection), and an experiment harness that
//! records attack cost, attack loss, node growth and timing.

pub mod agents;
pub mod attack;
pub mod config;
pub mod envs;
pub mod error;
pub mod exec;
pub mod grid;
pub mod harness;
pub mod rng;
pub mod target;
pub mod types;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use exec::Execution;
pub use target::{in_target_space, TargetPolicy, TargetPolicySpec};
pub use types::{distance, ActionVec, BoxRegion, EnvSpec, StateVec, StepRecord, Trajectory};
