//! Binary action cover trees with per-state-cell statistics.
//!
//! Node `(D, I)` owns an axis-aligned box of the action space; its children
//! `(D+1, 2I-1)` and `(D+1, 2I)` are the lower and upper halves of that box
//! split along axis `D mod dim`. Each node keeps, per state cell, a visit
//! count and the running mean of its off-policy value targets.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::types::{ActionVec, BoxRegion};

/// Position of a node in [`CoverTree::nodes`]. Children always sit after
/// their parent, so reverse index order is a valid post-order.
pub type NodeId = usize;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CellStats {
    pub count: u64,
    pub qhat: f64,
}

impl CellStats {
    /// Folds a new target into the running mean; `count` must already
    /// include the sample.
    pub fn qhat_update(&mut self, target: f64) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::contract("Q-hat update with zero visit count"));
        }
        let t = self.count as f64;
        self.qhat = (1.0 - 1.0 / t) * self.qhat + target / t;
        Ok(self.qhat)
    }

    /// Increments the count and folds `target` in; returns the new count.
    pub fn record(&mut self, target: f64) -> u64 {
        self.count += 1;
        self.qhat_update(target)
            .expect("count was just incremented");
        self.count
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeNode {
    pub depth: u32,
    /// 1-based index among nodes of the same depth.
    pub index: u64,
    pub region: BoxRegion,
    /// Action played when this node is selected (the box center).
    pub representative: ActionVec,
    pub children: Option<[NodeId; 2]>,
    pub stats: BTreeMap<usize, CellStats>,
}

impl TreeNode {
    fn new(depth: u32, index: u64, region: BoxRegion) -> Self {
        let representative = ActionVec::new(region.center());
        Self {
            depth,
            index,
            region,
            representative,
            children: None,
            stats: BTreeMap::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    pub fn cell(&self, m: usize) -> Option<&CellStats> {
        self.stats.get(&m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverTree {
    nodes: Vec<TreeNode>,
}

impl CoverTree {
    /// Root over `action_space` already split once: `{(0,1), (1,1), (1,2)}`.
    pub fn new(action_space: BoxRegion) -> Self {
        let mut tree = Self {
            nodes: vec![TreeNode::new(0, 1, action_space)],
        };
        tree.split(0).expect("root is a leaf");
        tree
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut TreeNode {
        &mut self.nodes[id]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaves(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    pub fn height(&self) -> u32 {
        self.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// Bisects leaf `id`; the children start with empty statistics.
    pub fn split(&mut self, id: NodeId) -> Result<[NodeId; 2]> {
        let node = &self.nodes[id];
        if !node.is_leaf() {
            return Err(Error::contract(format!(
                "split of non-leaf node ({}, {})",
                node.depth, node.index
            )));
        }
        let axis = node.depth as usize % node.region.dim();
        let (lower, upper) = node.region.bisect(axis);
        let (depth, index) = (node.depth + 1, node.index);
        let left = TreeNode::new(depth, 2 * index - 1, lower);
        let right = TreeNode::new(depth, 2 * index, upper);
        let ids = [self.nodes.len(), self.nodes.len() + 1];
        self.nodes.push(left);
        self.nodes.push(right);
        self.nodes[id].children = Some(ids);
        Ok(ids)
    }

    /// B-values for every node given each node's L-value:
    /// `B = L` at leaves, `B = max(L, min(B_left, B_right))` elsewhere.
    pub fn b_values(&self, lcb: impl Fn(&TreeNode) -> f64) -> Vec<f64> {
        let mut b = vec![f64::NEG_INFINITY; self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            let node = &self.nodes[id];
            let l = lcb(node);
            b[id] = match node.children {
                None => l,
                Some([c0, c1]) => l.max(b[c0].min(b[c1])),
            };
        }
        b
    }
}

/// Descends from the root toward the child with the smaller B-value (ties go
/// to the lower-half child) and returns the reached leaf and the path,
/// root first.
pub fn wor_traverse(tree: &CoverTree, b: &[f64]) -> (NodeId, Vec<NodeId>) {
    let mut id = tree.root();
    let mut path = vec![id];
    while let Some([left, right]) = tree.node(id).children {
        id = if b[left] <= b[right] { left } else { right };
        path.push(id);
    }
    (id, path)
}

/// Constants of the lower confidence bound and the expansion rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfidenceParams {
    pub horizon: usize,
    /// Number of state cells `M`.
    pub cells: usize,
    pub delta1: f64,
    pub nu1: f64,
    pub rho: f64,
    /// `L_s·d_s`, the value slack contributed by a state cell.
    pub state_slack: f64,
}

impl ConfidenceParams {
    /// Hoeffding radius `(H-h+1)/√(2t) · √ln(2·M·k·Σ|T| / δ₁)`.
    pub fn radius(&self, h: usize, t: u64, k: usize, total_nodes: usize) -> f64 {
        let span = (self.horizon + 1 - h) as f64;
        let log = (2.0 * self.cells as f64 * k as f64 * total_nodes as f64 / self.delta1).ln();
        span / (2.0 * t as f64).sqrt() * log.sqrt()
    }

    /// Value slack `ν₁ρ^D` of a node at depth `D`.
    pub fn node_slack(&self, depth: u32) -> f64 {
        self.nu1 * self.rho.powi(depth as i32)
    }

    /// Lower confidence bound of a node for one state cell; `-∞` if unvisited.
    pub fn lcb(
        &self,
        stats: Option<&CellStats>,
        depth: u32,
        h: usize,
        k: usize,
        total_nodes: usize,
    ) -> f64 {
        match stats {
            Some(s) if s.count > 0 => {
                s.qhat
                    - self.radius(h, s.count, k, total_nodes)
                    - self.state_slack
                    - self.node_slack(depth)
            }
            _ => f64::NEG_INFINITY,
        }
    }

    /// Expansion rule: split once the node's size dominates the radius.
    pub fn should_expand(
        &self,
        depth: u32,
        h: usize,
        t: u64,
        k: usize,
        total_nodes: usize,
    ) -> bool {
        self.node_slack(depth) >= self.radius(h, t, k, total_nodes)
    }
}
