//! Attackers that sit between the agent and the environment.

pub mod lcbt;
pub mod oracle;
pub mod partition;
pub mod planner;
mod planner_cache;
pub mod tree;

use std::fmt;
use std::str::FromStr;

pub use lcbt::{LcbtAttacker, LcbtConfig};
pub use oracle::{oracle_intercept, OracleAttacker, SampledPlanner, WorstActionSource};
pub use partition::{cell_index, StatePartition};
pub use planner::{plan, PlannerGrid, PlannerResolution};
pub use planner_cache::PlannerCache;
pub use tree::{wor_traverse, CellStats, ConfidenceParams, CoverTree, NodeId, TreeNode};

use crate::error::{Error, Result};
use crate::types::{ActionVec, StateVec};

/// The attacker's decision for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Interception {
    /// Action forwarded to the environment.
    pub action: ActionVec,
    /// Whether the attacker substituted an action of its own.
    pub attacked: bool,
}

impl Interception {
    pub fn pass(action: &ActionVec) -> Self {
        Self {
            action: action.clone(),
            attacked: false,
        }
    }
}

pub trait Attacker: Send {
    fn kind(&self) -> AttackerKind;

    /// Decides what to submit at step `h` of episode `k` (both 1-based).
    fn intercept(&mut self, k: usize, h: usize, s: &StateVec, a: &ActionVec) -> Interception;

    /// Normalized reward that followed the submitted action at step `h`.
    fn observe_reward(&mut self, _h: usize, _normalized_reward: f64) {}

    /// Episode `k` is over; steps never reached count as unattacked with zero reward.
    fn end_episode(&mut self, _k: usize) -> Result<()> {
        Ok(())
    }

    /// `Σ_h |T^h|` for tree-based attackers, zero otherwise.
    fn total_nodes(&self) -> usize {
        0
    }

    fn as_lcbt(&self) -> Option<&LcbtAttacker> {
        None
    }
}

/// Never attacks.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoAttack;

impl Attacker for NoAttack {
    fn kind(&self) -> AttackerKind {
        AttackerKind::None
    }

    fn intercept(&mut self, _k: usize, _h: usize, _s: &StateVec, a: &ActionVec) -> Interception {
        Interception::pass(a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackerKind {
    None,
    Oracle,
    Lcbt,
}

impl AttackerKind {
    pub fn name(self) -> &'static str {
        match self {
            AttackerKind::None => "none",
            AttackerKind::Oracle => "oracle",
            AttackerKind::Lcbt => "lcbt",
        }
    }
}

impl fmt::Display for AttackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(AttackerKind::None),
            "oracle" => Ok(AttackerKind::Oracle),
            "lcbt" => Ok(AttackerKind::Lcbt),
            _ => Err(Error::config(format!(
                "unknown attacker '{s}' (valid attackers: none, oracle, lcbt)"
            ))),
        }
    }
}
