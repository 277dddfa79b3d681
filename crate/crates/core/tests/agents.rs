use adversarl::agents::{Agent, GreedyPolicy, GridQAgent, GridQConfig};
use adversarl::envs::{Environment, SliderEnv};
use adversarl::grid::{PointLattice, UniformCells};
use adversarl::harness::run_experiment;
use adversarl::rng::{stream, Stream};
use adversarl::{Execution, RunConfig, StateVec};

/// Backward induction on the agent's own discretization: each state bin is
/// represented by its center, actions by the lattice, rewards are raw.
fn grid_dp_value(env: &SliderEnv, cfg: &GridQConfig) -> f64 {
    let spec = env.spec();
    let bins = UniformCells::new(spec.state.clone(), cfg.state_bins).unwrap();
    let acts = PointLattice::new(spec.action.clone(), cfg.action_bins).unwrap();
    let mut v_next = vec![0.0; bins.len()];
    for _h in (1..=spec.horizon).rev() {
        let mut v = vec![f64::NEG_INFINITY; bins.len()];
        for (b, vb) in v.iter_mut().enumerate() {
            let s = bins.center(b);
            for j in 0..acts.len() {
                let mut next = [0.0];
                let (r, terminal) = env.apply(&s, &acts.point(j), &mut next);
                let q = r + if terminal {
                    0.0
                } else {
                    v_next[bins.index(&next)]
                };
                *vb = vb.max(q);
            }
        }
        v_next = v;
    }
    // Initial states are uniform on [-0.7, 0.7].
    let n = 10_000;
    (0..n)
        .map(|i| v_next[bins.index(&[-0.7 + 1.4 * (i as f64 + 0.5) / n as f64])])
        .sum::<f64>()
        / n as f64
}

#[test]
fn gridq_unattacked_slider_approaches_grid_optimum() {
    let mut cfg = RunConfig::default();
    cfg.set_pair("attacker=none").unwrap();
    cfg.similarity_steps = 100;
    cfg.eval_episodes = 100;
    let out = run_experiment(&cfg, None, Execution::default()).unwrap();
    let rows = &out.metrics.episodes;
    let tail = &rows[rows.len() - rows.len() / 10..];
    let mean = tail.iter().map(|e| e.reward_raw).sum::<f64>() / tail.len() as f64;
    let optimum = grid_dp_value(&SliderEnv::new(), &cfg.gridq);
    println!("last-decile reward {mean:.4}, grid optimum {optimum:.4}");
    assert!(mean > 0.9 * optimum, "{mean} vs {optimum}");
}

#[test]
fn greedy_act_is_deterministic() {
    let env = SliderEnv::new();
    let mut agent =
        GridQAgent::new(env.spec(), GridQConfig::default(), stream(4, Stream::Agent)).unwrap();
    let s = StateVec::from([0.3]);
    let first = agent.act(2, &s, false);
    for _ in 0..10 {
        assert_eq!(agent.act(2, &s, false), first);
    }
    assert_eq!(agent.greedy(2, &s), first);
}

#[test]
fn actor_critic_stays_in_bounds_under_attack() {
    // The harness rejects any out-of-box action or state, so finishing is the check.
    let mut cfg = RunConfig::default();
    for pair in [
        "agent=actorcritic",
        "attacker=lcbt",
        "episodes=300",
        "similarity_steps=100",
        "eval_episodes=20",
    ] {
        cfg.set_pair(pair).unwrap();
    }
    let out = run_experiment(&cfg, None, Execution::default()).unwrap();
    assert_eq!(out.metrics.episodes.len(), 300);
    let s = out.summary.similarity;
    assert!((0.0..=1.0).contains(&s));
}
