//! Post-run analyses: similarity to the target policy, greedy evaluation,
//! sublinearity of the attack cost, node-growth bound and time share.

use serde::{Deserialize, Serialize};

use super::metrics::{Checkpoint, EpisodeMetrics};
use crate::agents::GreedyPolicy;
use crate::envs::Environment;
use crate::exec::Execution;
use crate::rng::{substream, Stream};
use crate::target::TargetPolicySpec;
use crate::types::{ActionVec, StateVec};

impl GreedyPolicy for TargetPolicySpec {
    fn greedy(&self, h: usize, s: &StateVec) -> ActionVec {
        self.action(h, s)
    }
}

/// Fraction of `steps` target-policy states at which `policy` acts within
/// the target radius. Episodes restart after termination; episode `e` draws
/// its initial states from its own substream, so the result does not depend
/// on the execution strategy.
pub fn similarity_test(
    policy: &dyn GreedyPolicy,
    env: &dyn Environment,
    target: &TargetPolicySpec,
    steps: usize,
    seed: u64,
    exec: Execution,
) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    let horizon = env.spec().horizon;
    let episodes = steps.div_ceil(horizon);
    let hits: Vec<usize> = exec.map_range(episodes, |e| {
        let mut rng = substream(seed, Stream::Similarity, e as u64);
        let len = horizon.min(steps - e * horizon);
        let mut s = env.reset(&mut rng);
        let mut next = vec![0.0; s.dim()];
        let mut hit = 0;
        for h in 1..=len {
            let a2 = target.action(h, &s);
            let a1 = policy.greedy(h, &s);
            if target.contains_around(&a2, &a1) {
                hit += 1;
            }
            let (_, terminal) = env.apply(&s, &a2, &mut next);
            s = if terminal {
                env.reset(&mut rng)
            } else {
                StateVec::new(next.clone())
            };
        }
        hit
    });
    hits.iter().sum::<usize>() as f64 / steps as f64
}

/// Mean raw episode reward of `policy` without any attacker.
pub fn evaluate_policy(
    policy: &dyn GreedyPolicy,
    env: &dyn Environment,
    episodes: usize,
    seed: u64,
    exec: Execution,
) -> f64 {
    if episodes == 0 {
        return 0.0;
    }
    let totals = exec.map_range(episodes, |e| {
        let mut rng = substream(seed, Stream::Evaluation, e as u64);
        let mut s = env.reset(&mut rng);
        let mut next = vec![0.0; s.dim()];
        let mut total = 0.0;
        for h in 1..=env.spec().horizon {
            let a = policy.greedy(h, &s);
            let (r, terminal) = env.apply(&s, &a, &mut next);
            total += r;
            if terminal {
                break;
            }
            s = StateVec::new(next.clone());
        }
        total
    });
    totals.iter().sum::<f64>() / episodes as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublinearityReport {
    /// Attacks per step over the first tenth of the episodes.
    pub first_decile_rate: f64,
    pub last_decile_rate: f64,
    /// `last / first`; 0 when both are zero, infinite when only the first is.
    pub decile_ratio: f64,
    /// Least-squares slope of `log cum_tau` against `log steps` over the
    /// second half of training (0 if no attack happened there).
    pub loglog_slope_second_half: f64,
    /// The same slope over all post-warm-up episodes.
    pub loglog_slope_post_warmup: f64,
}

fn decile_rate(rows: &[EpisodeMetrics], horizon: usize) -> f64 {
    let attacks: u64 = rows.iter().map(|r| r.attacks).sum();
    attacks as f64 / (rows.len() * horizon).max(1) as f64
}

fn loglog_slope(rows: &[EpisodeMetrics], horizon: usize) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.cum_tau > 0)
        .map(|r| (((r.episode * horizon) as f64).ln(), (r.cum_tau as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

pub fn sublinearity_report(
    rows: &[EpisodeMetrics],
    horizon: usize,
    warmup: usize,
) -> SublinearityReport {
    let n = rows.len();
    let tenth = (n / 10).max(1).min(n);
    let first = decile_rate(&rows[..tenth], horizon);
    let last = decile_rate(&rows[n - tenth..], horizon);
    let ratio = match (first == 0.0, last == 0.0) {
        (true, true) => 0.0,
        (true, false) => f64::INFINITY,
        _ => last / first,
    };
    SublinearityReport {
        first_decile_rate: first,
        last_decile_rate: last,
        decile_ratio: ratio,
        loglog_slope_second_half: loglog_slope(&rows[n / 2..], horizon),
        loglog_slope_post_warmup: loglog_slope(&rows[warmup.min(n)..], horizon),
    }
}

/// Upper bound on `|T^h_k|`:
/// `4·[k·ν₁²(2−ρ²) / ((H−h+1)²·ln(6MH/δ₁)) + 1]^E` with `E = log_{2ρ⁻²} 2`.
pub fn node_bound(
    k: usize,
    h: usize,
    horizon: usize,
    cells: usize,
    nu1: f64,
    rho: f64,
    delta1: f64,
) -> f64 {
    let span = (horizon + 1 - h) as f64;
    let log = (6.0 * cells as f64 * horizon as f64 / delta1).ln();
    let base = k as f64 * nu1 * nu1 * (2.0 - rho * rho) / (span * span * log) + 1.0;
    let exponent = 2f64.ln() / (2.0 / (rho * rho)).ln();
    4.0 * base.powf(exponent)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeCheck {
    pub episode: usize,
    pub h: usize,
    pub nodes: usize,
    pub bound: f64,
    pub pass: bool,
}

/// Bound constants needed by [`node_growth_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundParams {
    pub horizon: usize,
    pub cells: usize,
    pub nu1: f64,
    pub rho: f64,
    pub delta1: f64,
}

pub fn node_growth_check(checkpoints: &[Checkpoint], p: BoundParams) -> Vec<NodeCheck> {
    let mut out = Vec::new();
    for cp in checkpoints {
        for (i, &nodes) in cp.nodes_per_step.iter().enumerate() {
            let h = i + 1;
            let bound = node_bound(cp.episode, h, p.horizon, p.cells, p.nu1, p.rho, p.delta1);
            out.push(NodeCheck {
                episode: cp.episode,
                h,
                nodes,
                bound,
                pass: nodes as f64 <= bound,
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeShareReport {
    /// `(episode, attacker share)` at each checkpoint.
    pub series: Vec<(usize, f64)>,
    pub final_share: f64,
    pub max_share: f64,
}

/// `None` unless the run was timed.
pub fn time_share_report(checkpoints: &[Checkpoint]) -> Option<TimeShareReport> {
    let series: Vec<(usize, f64)> = checkpoints
        .iter()
        .map(|c| c.attacker_time_share.map(|s| (c.episode, s)))
        .collect::<Option<_>>()?;
    let final_share = series.last()?.1;
    let max_share = series.iter().map(|p| p.1).fold(0.0, f64::max);
    Some(TimeShareReport {
        series,
        final_share,
        max_share,
    })
}
