//! Independent oracles for the LCBT statistics, B-values and traversal.

mod common;

use std::collections::HashMap;

use adversarl::attack::lcbt::{default_nu1, default_rho};
use adversarl::attack::{
    wor_traverse, Attacker, CellStats, CoverTree, LcbtAttacker, LcbtConfig, NodeId,
};
use adversarl::envs::{EnvKind, Environment, SliderEnv};
use adversarl::rng::{stream, Stream};
use adversarl::{ActionVec, BoxRegion, StateVec};
use proptest::prelude::*;
use rand::Rng as _;

use common::{brute_b, brute_descend, random_case};

#[test]
fn incremental_qhat_matches_batch_mean() {
    let mut rng = stream(1, Stream::Evaluation);
    let mut stats = CellStats::default();
    let mut sum = 0.0;
    for i in 1..=1000 {
        let target: f64 = rng.random_range(-3.0..12.0);
        sum += target;
        stats.record(target);
        assert!((stats.qhat - sum / i as f64).abs() <= 1e-9);
    }
    assert_eq!(stats.count, 1000);

    let mut s = CellStats::default();
    s.record(0.5);
    s.record(0.7);
    assert!((s.qhat - 0.6).abs() < 1e-15);
    assert!(CellStats::default().qhat_update(1.0).is_err());
}

#[test]
fn b_values_and_traverse_match_brute_force_on_random_trees() {
    let mut rng = stream(2, Stream::Evaluation);
    for t in 0..50 {
        let (tree, l) = random_case(&mut rng, 1 + t % 3);
        // Node identity through (depth, index), the only handle the closure gets.
        let by_key: HashMap<(u32, u64), f64> = tree
            .nodes()
            .iter()
            .zip(&l)
            .map(|(n, v)| ((n.depth, n.index), *v))
            .collect();
        let b = tree.b_values(|n| by_key[&(n.depth, n.index)]);
        for id in 0..tree.len() {
            assert_eq!(b[id], brute_b(&tree, &l, id), "tree {t} node {id}");
            assert!(b[id] >= l[id]);
            if tree.node(id).is_leaf() {
                assert_eq!(b[id], l[id]);
            }
        }
        let (leaf, path) = wor_traverse(&tree, &b);
        let mut oracle = Vec::new();
        brute_descend(&tree, &l, tree.root(), &mut oracle);
        assert_eq!(path, oracle, "tree {t}");
        assert_eq!(leaf, *oracle.last().unwrap());
        assert!(tree.node(leaf).is_leaf());
        assert_eq!(wor_traverse(&tree, &b), (leaf, path));
    }
}

#[test]
fn traverse_examples() {
    let tree = CoverTree::new(BoxRegion::cube(1, -1.0, 1.0).unwrap());
    let b = vec![-2.0, f64::NEG_INFINITY, f64::NEG_INFINITY];
    assert_eq!(wor_traverse(&tree, &b).0, 1);
    let b = vec![-2.0, -1.0, -5.0];
    assert_eq!(wor_traverse(&tree, &b).0, 2);
    let bv = tree.b_values(|n| {
        if n.depth == 0 {
            -2.0
        } else {
            f64::NEG_INFINITY
        }
    });
    assert_eq!(bv[0], -2.0);
}

/// Replays scripted episodes and rebuilds every `(node, cell)` statistic from
/// the raw reward log with the off-policy target written out directly.
#[test]
fn tree_statistics_match_replayed_targets() {
    let env = SliderEnv::new();
    let target = env.target_policy(0.0625).unwrap();
    let warmup = 5;
    let mut att = LcbtAttacker::new(
        env.spec(),
        target,
        LcbtConfig {
            warmup,
            cells_per_axis: 16,
            ..LcbtConfig::default()
        },
    )
    .unwrap();
    let mut rng = stream(3, Stream::Evaluation);
    let mut expected: HashMap<(usize, NodeId, usize), Vec<f64>> = HashMap::new();
    let mut attacks_after_warmup = [0u64; 10];
    for k in 1..=400 {
        let mut log = Vec::new();
        for h in 1..=10 {
            let s = StateVec::from([rng.random_range(-1.0..=1.0)]);
            let a = ActionVec::from([rng.random_range(-1.0..=1.0)]);
            let (i, node) = att.lcbt_intercept(k, h, &s, &a);
            assert_eq!(i.attacked, node.is_some());
            if k <= warmup {
                assert!(!i.attacked);
            }
            let r: f64 = rng.random();
            att.observe_reward(h, r);
            log.push((att.partition().index(&s), node, r));
        }
        for h in 1..=10 {
            let (cell, node, r) = log[h - 1];
            if let Some(id) = node {
                attacks_after_warmup[h - 1] += 1;
                let suffix_clean = log[h..].iter().all(|e| e.1.is_none());
                let g: f64 = if suffix_clean {
                    log[h..].iter().map(|e| e.2).sum()
                } else {
                    0.0
                };
                expected.entry((h, id, cell)).or_default().push(r + g);
            }
        }
        att.end_episode(k).unwrap();
    }
    assert_eq!(att.attacks_per_step(), &attacks_after_warmup[..]);
    let mut seen = 0;
    for (h, tree) in att.trees().iter().enumerate() {
        let mut count_sum = 0;
        for (id, node) in tree.nodes().iter().enumerate() {
            for (&m, st) in &node.stats {
                let targets = &expected[&(h + 1, id, m)];
                assert_eq!(st.count as usize, targets.len());
                let mean = targets.iter().sum::<f64>() / targets.len() as f64;
                assert!((st.qhat - mean).abs() <= 1e-9);
                count_sum += st.count;
                seen += 1;
            }
        }
        // Count conservation per step.
        assert_eq!(count_sum, attacks_after_warmup[h]);
    }
    assert_eq!(seen, expected.len());
    assert!(att.total_nodes() > 30, "trees should have grown");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Every node of any split sequence respects `diam ≤ ν₁ρ^D` under the
    /// default constants, and children tile their parent.
    #[test]
    fn default_constants_bound_every_node(kind in prop::sample::select(EnvKind::ALL.to_vec()), picks in prop::collection::vec(any::<prop::sample::Index>(), 0..60)) {
        let env = kind.build();
        let space = env.spec().action.clone();
        let (nu1, rho) = (default_nu1(&space), default_rho(space.dim()));
        let mut tree = CoverTree::new(space);
        for p in picks {
            let leaves: Vec<NodeId> = tree.leaves().collect();
            let id = leaves[p.index(leaves.len())];
            let [a, b] = tree.split(id).unwrap();
            let parent = tree.node(id).region.clone();
            let (l, u) = (&tree.node(a).region, &tree.node(b).region);
            let vol = |r: &BoxRegion| (0..r.dim()).map(|i| r.width(i)).product::<f64>();
            prop_assert!((vol(l) + vol(u) - vol(&parent)).abs() <= 1e-12 * vol(&parent).max(1.0));
            prop_assert!(parent.contains(l.lo()) && parent.contains(u.hi()));
            prop_assert!(parent.contains(&tree.node(a).representative));
        }
        for n in tree.nodes() {
            prop_assert!(n.region.diameter() <= nu1 * rho.powi(n.depth as i32) * (1.0 + 1e-12));
            prop_assert!(n.region.contains(&n.representative));
        }
    }
}
