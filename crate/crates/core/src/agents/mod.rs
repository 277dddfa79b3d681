//! Learning agents. Agents see only their own action and its observed
//! outcome; the attacker's substitution is invisible to them.

mod actor_critic;
mod gridq;
mod mlp;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use actor_critic::{ActorCriticAgent, ActorCriticConfig, ActorCriticSnapshot};
pub use gridq::{GridQAgent, GridQConfig, GridQTable};
pub use mlp::{Activation, Mlp};

use crate::error::{Error, Result};
use crate::types::{ActionVec, StateVec};

/// What an agent learns from after one step: its own action and the
/// reward/next state that actually followed.
#[derive(Clone, Copy, Debug)]
pub struct Experience<'a> {
    pub h: usize,
    pub state: &'a StateVec,
    pub action: &'a ActionVec,
    /// Raw environment reward.
    pub reward: f64,
    pub next_state: &'a StateVec,
    pub terminal: bool,
}

/// A deterministic greedy policy (a trained agent at test time).
pub trait GreedyPolicy: Send + Sync {
    fn greedy(&self, h: usize, s: &StateVec) -> ActionVec;
}

pub trait Agent: GreedyPolicy {
    /// Action for step `h`; `explore = false` is the deterministic greedy action.
    fn act(&mut self, h: usize, s: &StateVec, explore: bool) -> ActionVec;

    fn observe(&mut self, exp: &Experience<'_>);

    /// Called once after the last step of episode `k` (1-based).
    fn end_episode(&mut self, _k: usize) {}

    fn snapshot(&self) -> AgentSnapshot;
}

/// Serializable trained-agent state.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AgentSnapshot {
    GridQ(GridQTable),
    ActorCritic(ActorCriticSnapshot),
}

impl AgentSnapshot {
    pub fn into_policy(self) -> Box<dyn GreedyPolicy> {
        match self {
            AgentSnapshot::GridQ(t) => Box::new(t),
            AgentSnapshot::ActorCritic(s) => Box::new(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgentKind {
    GridQ,
    ActorCritic,
    External,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::GridQ => "gridq",
            AgentKind::ActorCritic => "actorcritic",
            AgentKind::External => "external",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gridq" => Ok(AgentKind::GridQ),
            "actorcritic" => Ok(AgentKind::ActorCritic),
            "external" => Ok(AgentKind::External),
            _ => Err(Error::config(format!(
                "unknown agent '{s}' (valid agents: gridq, actorcritic, external)"
            ))),
        }
    }
}
