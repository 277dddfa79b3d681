//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use adversarl::attack::{CellStats, ConfidenceParams, CoverTree, NodeId};
use adversarl::BoxRegion;

/// `B = max(L, min over children of B)`, by plain recursion.
pub fn brute_b(tree: &CoverTree, l: &[f64], id: NodeId) -> f64 {
    match tree.node(id).children {
        None => l[id],
        Some([a, b]) => l[id].max(brute_b(tree, l, a).min(brute_b(tree, l, b))),
    }
}

/// Descends toward the child with the smaller brute-force B, left on ties.
pub fn brute_descend(tree: &CoverTree, l: &[f64], id: NodeId, path: &mut Vec<NodeId>) {
    path.push(id);
    if let Some([a, b]) = tree.node(id).children {
        let next = if brute_b(tree, l, a) <= brute_b(tree, l, b) {
            a
        } else {
            b
        };
        brute_descend(tree, l, next, path);
    }
}

pub fn random_tree(rng: &mut impl rand::Rng, dim: usize) -> CoverTree {
    let mut tree = CoverTree::new(BoxRegion::cube(dim, -1.0, 1.0).unwrap());
    let splits = rng.random_range(0..40);
    for _ in 0..splits {
        let leaves: Vec<NodeId> = tree.leaves().collect();
        let pick = leaves[rng.random_range(0..leaves.len())];
        tree.split(pick).unwrap();
    }
    tree
}

pub fn reference_params() -> ConfidenceParams {
    ConfidenceParams {
        horizon: 10,
        cells: 16,
        delta1: 0.05,
        nu1: 2.0,
        rho: 0.5,
        state_slack: 0.125,
    }
}

/// A random tree with random statistics (about a quarter of the nodes
/// unvisited) and its per-node LCBs.
pub fn random_case(rng: &mut impl rand::Rng, dim: usize) -> (CoverTree, Vec<f64>) {
    let params = reference_params();
    let tree = random_tree(rng, dim);
    let stats: Vec<Option<CellStats>> = (0..tree.len())
        .map(|_| {
            (rng.random::<f64>() > 0.25).then(|| CellStats {
                count: rng.random_range(1..50),
                qhat: rng.random_range(0.0..10.0),
            })
        })
        .collect();
    let (h, k, total) = (
        rng.random_range(1..=10),
        rng.random_range(1..1000),
        tree.len() * 10,
    );
    let l = (0..tree.len())
        .map(|i| params.lcb(stats[i].as_ref(), tree.node(i).depth, h, k, total))
        .collect();
    (tree, l)
}

/// Node-count bound written out from its closed form.
pub fn node_bound_oracle(
    k: f64,
    h: f64,
    horizon: f64,
    m: f64,
    nu1: f64,
    rho: f64,
    delta1: f64,
) -> f64 {
    let inner = k * nu1.powi(2) * (2.0 - rho.powi(2))
        / ((horizon - h + 1.0).powi(2) * (6.0 * m * horizon / delta1).ln());
    let e = 1.0 / (2.0 * rho.powi(-2)).log2();
    4.0 * (inner + 1.0).powf(e)
}
