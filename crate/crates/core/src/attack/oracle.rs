//! White-box attacker: substitutes the worst action whenever the agent
//! leaves the target action space.

use std::sync::Arc;

use rand::Rng as _;

use super::planner::PlannerGrid;
use super::{Attacker, AttackerKind, Interception};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::grid::UniformCells;
use crate::rng::{substream, Stream};
use crate::target::TargetPolicySpec;
use crate::types::{ActionVec, StateVec};

/// Anything that can name `a⁻_h(s)`.
pub trait WorstActionSource: Send + Sync {
    fn worst_action(&self, h: usize, s: &StateVec) -> ActionVec;

    /// `Δ̂_min` when the source knows it.
    fn min_gap(&self) -> Option<f64> {
        None
    }
}

impl WorstActionSource for PlannerGrid {
    fn worst_action(&self, h: usize, s: &StateVec) -> ActionVec {
        PlannerGrid::worst_action(self, h, s)
    }

    fn min_gap(&self) -> Option<f64> {
        Some(PlannerGrid::min_gap(self))
    }
}

/// Monte-Carlo argmin for spaces where a full grid is out of reach.
///
/// Each query scores a fixed number of uniformly sampled actions by the
/// one-step normalized reward plus the return of the target policy from the
/// resulting state, and returns the lowest scorer. Samples are drawn from a
/// stream keyed by `(seed, h, coarse state cell)`, so repeated queries in
/// the same cell use the same candidates.
#[derive(Clone, Debug)]
pub struct SampledPlanner {
    env: Arc<dyn Environment>,
    target: TargetPolicySpec,
    samples: usize,
    seed: u64,
    cells: UniformCells,
}

impl SampledPlanner {
    pub fn new(
        env: Arc<dyn Environment>,
        target: TargetPolicySpec,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if samples == 0 {
            return Err(Error::config("planner_samples must be positive"));
        }
        let cells = UniformCells::new(env.spec().state.clone(), 8)?;
        Ok(Self {
            env,
            target,
            samples,
            seed,
            cells,
        })
    }

    /// Normalized return of the target policy from `s` at step `h` onward.
    fn target_return(&self, h: usize, s: &[f64]) -> f64 {
        let spec = self.env.spec();
        let mut s = StateVec::new(s.to_vec());
        let mut next = vec![0.0; s.dim()];
        let mut total = 0.0;
        for step in h..=spec.horizon {
            let a = self.target.action(step, &s);
            let (r, terminal) = self.env.apply(&s, &a, &mut next);
            total += spec.normalize_reward(r);
            if terminal {
                break;
            }
            s = StateVec::new(next.clone());
        }
        total
    }

    /// Estimated `Q^o_h(s, a)` under the target-policy continuation.
    pub fn score(&self, h: usize, s: &StateVec, a: &[f64]) -> f64 {
        let spec = self.env.spec();
        let mut next = vec![0.0; s.dim()];
        let (r, terminal) = self.env.apply(s, a, &mut next);
        let future = if terminal || h == spec.horizon {
            0.0
        } else {
            self.target_return(h + 1, &next)
        };
        spec.normalize_reward(r) + future
    }
}

impl WorstActionSource for SampledPlanner {
    fn worst_action(&self, h: usize, s: &StateVec) -> ActionVec {
        let spec = self.env.spec();
        let cell = self.cells.index(s) as u64;
        let mut rng = substream(self.seed, Stream::Attacker, (h as u64) << 32 | cell);
        let (lo, hi) = (spec.action.lo(), spec.action.hi());
        let mut best: Option<(f64, Vec<f64>)> = None;
        for _ in 0..self.samples {
            let a: Vec<f64> = lo
                .iter()
                .zip(hi)
                .map(|(l, u)| rng.random_range(*l..=*u))
                .collect();
            let score = self.score(h, s, &a);
            if best.as_ref().is_none_or(|(b, _)| score < *b) {
                best = Some((score, a));
            }
        }
        ActionVec::new(best.expect("samples > 0").1)
    }
}

/// Oracle decision: pass through during warm-up or when `a` is in the
/// target space, otherwise submit `a⁻_h(s)`.
pub fn oracle_intercept(
    source: &dyn WorstActionSource,
    target: &TargetPolicySpec,
    warmup: usize,
    k: usize,
    h: usize,
    s: &StateVec,
    a: &ActionVec,
) -> Interception {
    if k <= warmup || target.contains(h, s, a) {
        return Interception::pass(a);
    }
    Interception {
        action: source.worst_action(h, s),
        attacked: true,
    }
}

#[derive(Clone)]
pub struct OracleAttacker {
    source: Arc<dyn WorstActionSource>,
    target: TargetPolicySpec,
    warmup: usize,
}

impl std::fmt::Debug for OracleAttacker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OracleAttacker")
            .field("target", &self.target)
            .field("warmup", &self.warmup)
            .finish_non_exhaustive()
    }
}

impl OracleAttacker {
    pub fn new(
        source: Arc<dyn WorstActionSource>,
        target: TargetPolicySpec,
        warmup: usize,
    ) -> Self {
        Self {
            source,
            target,
            warmup,
        }
    }

    pub fn source(&self) -> &dyn WorstActionSource {
        self.source.as_ref()
    }
}

impl Attacker for OracleAttacker {
    fn kind(&self) -> AttackerKind {
        AttackerKind::Oracle
    }

    fn intercept(&mut self, k: usize, h: usize, s: &StateVec, a: &ActionVec) -> Interception {
        oracle_intercept(self.source.as_ref(), &self.target, self.warmup, k, h, s, a)
    }
}
