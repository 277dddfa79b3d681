//! Black-box attacker: lower-confidence-bound search over per-step action
//! cover trees, fed only by observed states, actions and rewards.

use super::partition::StatePartition;
use super::tree::{wor_traverse, ConfidenceParams, CoverTree, NodeId};
use super::{Attacker, AttackerKind, Interception};
use crate::error::{Error, Result};
use crate::target::TargetPolicySpec;
use crate::types::{ActionVec, BoxRegion, EnvSpec, StateVec};

#[derive(Clone, Debug, PartialEq)]
pub struct LcbtConfig {
    /// Episodes `𝒦` during which the attacker only watches.
    pub warmup: usize,
    pub delta1: f64,
    /// Node-size constant; `None` picks a value that bounds every node of
    /// the midpoint-split schedule (see [`default_nu1`]).
    pub nu1: Option<f64>,
    /// Node-size decay; `None` picks `2^(-1/dim)`.
    pub rho: Option<f64>,
    pub cells_per_axis: usize,
}

impl Default for LcbtConfig {
    fn default() -> Self {
        Self {
            warmup: 0,
            delta1: 0.05,
            nu1: None,
            rho: None,
            cells_per_axis: 4,
        }
    }
}

/// `diam(A)` in one dimension, `1.2·diam(A)` otherwise. Round-robin
/// midpoint splits shrink the diameter by `2^(-1/dim)` per level only on
/// average; the worst phase of the cycle overshoots by at most ~12.5%.
pub fn default_nu1(action_space: &BoxRegion) -> f64 {
    if action_space.dim() == 1 {
        action_space.diameter()
    } else {
        1.2 * action_space.diameter()
    }
}

pub fn default_rho(action_dim: usize) -> f64 {
    0.5f64.powf(1.0 / action_dim as f64)
}

#[derive(Clone, Copy, Debug, Default)]
struct BufferedStep {
    cell: usize,
    /// Node whose representative replaced the agent's action (`w_h = 0`).
    selected: Option<NodeId>,
    reward: f64,
}

#[derive(Clone, Debug)]
pub struct LcbtAttacker {
    config: LcbtConfig,
    params: ConfidenceParams,
    partition: StatePartition,
    target: TargetPolicySpec,
    trees: Vec<CoverTree>,
    buffer: Vec<BufferedStep>,
    attacks_per_step: Vec<u64>,
}

impl LcbtAttacker {
    pub fn new(spec: &EnvSpec, target: TargetPolicySpec, config: LcbtConfig) -> Result<Self> {
        if !(config.delta1 > 0.0 && config.delta1 < 1.0) {
            return Err(Error::config("delta1 must lie in (0, 1)"));
        }
        let nu1 = config.nu1.unwrap_or_else(|| default_nu1(&spec.action));
        let rho = config.rho.unwrap_or_else(|| default_rho(spec.action_dim()));
        if !(nu1 > 0.0) {
            return Err(Error::config("nu1 must be positive"));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::config("rho must lie in (0, 1)"));
        }
        let partition = StatePartition::new(spec.state.clone(), config.cells_per_axis)?;
        let params = ConfidenceParams {
            horizon: spec.horizon,
            cells: partition.len(),
            delta1: config.delta1,
            nu1,
            rho,
            state_slack: partition.cell_diameter(),
        };
        let trees = vec![CoverTree::new(spec.action.clone()); spec.horizon];
        let attacker = Self {
            config,
            params,
            partition,
            target,
            trees,
            buffer: vec![BufferedStep::default(); spec.horizon],
            attacks_per_step: vec![0; spec.horizon],
        };
        for tree in &attacker.trees {
            for id in 0..tree.len() {
                attacker.check_geometry(tree, id)?;
            }
        }
        Ok(attacker)
    }

    pub fn params(&self) -> &ConfidenceParams {
        &self.params
    }

    pub fn config(&self) -> &LcbtConfig {
        &self.config
    }

    pub fn partition(&self) -> &StatePartition {
        &self.partition
    }

    pub fn trees(&self) -> &[CoverTree] {
        &self.trees
    }

    /// Attacks launched at each step since the warm-up ended.
    pub fn attacks_per_step(&self) -> &[u64] {
        &self.attacks_per_step
    }

    fn check_geometry(&self, tree: &CoverTree, id: NodeId) -> Result<()> {
        let node = tree.node(id);
        let diam = node.region.diameter();
        let bound = self.params.node_slack(node.depth);
        if diam > bound {
            return Err(Error::Invariant {
                invariant: "tree geometry",
                detail: format!(
                    "node ({}, {}) has diameter {diam} > nu1*rho^D = {bound}",
                    node.depth, node.index
                ),
            });
        }
        Ok(())
    }

    /// B-values of tree `h` for state cell `m` at episode `k`.
    pub fn b_values(&self, h: usize, m: usize, k: usize) -> Vec<f64> {
        let total = self.total_nodes();
        let params = &self.params;
        self.trees[h - 1].b_values(|node| params.lcb(node.cell(m), node.depth, h, k, total))
    }

    /// The node a traversal would pick for `(h, cell m)` at episode `k`.
    pub fn select(&self, h: usize, m: usize, k: usize) -> (NodeId, Vec<NodeId>) {
        let b = self.b_values(h, m, k);
        wor_traverse(&self.trees[h - 1], &b)
    }

    /// Full decision including the selected node (if any).
    pub fn lcbt_intercept(
        &mut self,
        k: usize,
        h: usize,
        s: &StateVec,
        a: &ActionVec,
    ) -> (Interception, Option<NodeId>) {
        let cell = self.partition.index(s);
        let step = &mut self.buffer[h - 1];
        step.cell = cell;
        step.reward = 0.0;
        if k <= self.config.warmup || self.target.contains(h, s, a) {
            step.selected = None;
            return (Interception::pass(a), None);
        }
        let (leaf, _) = self.select(h, cell, k);
        self.buffer[h - 1].selected = Some(leaf);
        self.attacks_per_step[h - 1] += 1;
        let action = self.trees[h - 1].node(leaf).representative.clone();
        (
            Interception {
                action,
                attacked: true,
            },
            Some(leaf),
        )
    }
}

impl Attacker for LcbtAttacker {
    fn kind(&self) -> AttackerKind {
        AttackerKind::Lcbt
    }

    fn intercept(&mut self, k: usize, h: usize, s: &StateVec, a: &ActionVec) -> Interception {
        self.lcbt_intercept(k, h, s, a).0
    }

    fn observe_reward(&mut self, h: usize, normalized_reward: f64) {
        self.buffer[h - 1].reward = normalized_reward;
    }

    fn end_episode(&mut self, k: usize) -> Result<()> {
        let total = self.total_nodes();
        let mut suffix_return = 0.0;
        let mut suffix_ratio = 1.0;
        for h in (1..=self.params.horizon).rev() {
            let step = self.buffer[h - 1];
            if let Some(id) = step.selected {
                let target = step.reward + suffix_return * suffix_ratio;
                let tree = &mut self.trees[h - 1];
                let node = tree.node_mut(id);
                let t = node.stats.entry(step.cell).or_default().record(target);
                let depth = node.depth;
                if node.is_leaf() && self.params.should_expand(depth, h, t, k, total) {
                    let children = tree.split(id)?;
                    let tree = &self.trees[h - 1];
                    for c in children {
                        self.check_geometry(tree, c)?;
                    }
                }
            }
            suffix_return += step.reward;
            if step.selected.is_some() {
                suffix_ratio = 0.0;
            }
        }
        self.buffer.fill(BufferedStep::default());
        Ok(())
    }

    fn total_nodes(&self) -> usize {
        self.trees.iter().map(CoverTree::len).sum()
    }

    fn as_lcbt(&self) -> Option<&LcbtAttacker> {
        Some(self)
    }
}
