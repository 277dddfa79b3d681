//! Grid dynamic-programming planner for the white-box attacker.
//!
//! States and actions are snapped to point lattices. Backward induction
//! computes `Q^o_h(s, a) = r̄(s, a) + V^o_{h+1}(nearest(s'))` where `V^o` is
//! the best value reachable while staying inside the target action space,
//! then records the worst action `a⁻_h(s) = argmin_a Q^o_h(s, a)`.

use crate::envs::{model, EnvKind, Environment};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::PointLattice;
use crate::target::TargetPolicySpec;
use crate::types::{ActionVec, StateVec};

/// Lattice points per axis for the state and action grids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PlannerResolution {
    pub state_points: usize,
    pub action_points: usize,
}

impl PlannerResolution {
    /// Full-grid defaults; `None` for environments planned by sampling.
    pub fn default_for(kind: EnvKind) -> Option<Self> {
        match kind {
            EnvKind::Slider => Some(Self {
                state_points: 201,
                action_points: 201,
            }),
            EnvKind::Vehicle2 => Some(Self {
                state_points: 41,
                action_points: 21,
            }),
            EnvKind::Vehicle5 => None,
        }
    }
}

/// Immutable planner tables. All per-step tables are stored `h`-major with
/// `h` 1-based in the accessors.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannerGrid {
    pub(crate) horizon: usize,
    pub(crate) states: PointLattice,
    pub(crate) actions: PointLattice,
    /// `H × S × A`.
    pub(crate) q: Vec<f64>,
    /// `H × S × A`; whether the grid action lies in the target space.
    pub(crate) in_target: Vec<bool>,
    /// `H × S`.
    pub(crate) v: Vec<f64>,
    pub(crate) worst: Vec<u32>,
    pub(crate) best: Vec<u32>,
    pub(crate) min_gap: f64,
}

impl PlannerGrid {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> &PointLattice {
        &self.states
    }

    pub fn actions(&self) -> &PointLattice {
        &self.actions
    }

    #[inline]
    fn sa(&self, h: usize, s: usize, a: usize) -> usize {
        ((h - 1) * self.states.len() + s) * self.actions.len() + a
    }

    #[inline]
    fn hs(&self, h: usize, s: usize) -> usize {
        (h - 1) * self.states.len() + s
    }

    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[self.sa(h, s, a)]
    }

    /// Q-row of state point `s` at step `h`.
    pub fn q_row(&self, h: usize, s: usize) -> &[f64] {
        let start = self.sa(h, s, 0);
        &self.q[start..start + self.actions.len()]
    }

    pub fn in_target(&self, h: usize, s: usize, a: usize) -> bool {
        self.in_target[self.sa(h, s, a)]
    }

    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[self.hs(h, s)]
    }

    /// Grid index of `a⁻_h` at state point `s`.
    pub fn worst_index(&self, h: usize, s: usize) -> usize {
        self.worst[self.hs(h, s)] as usize
    }

    /// Grid index of the in-target action attaining `V^o_h` at state point `s`.
    pub fn best_index(&self, h: usize, s: usize) -> usize {
        self.best[self.hs(h, s)] as usize
    }

    /// `Δ̂_min = min_{h,s} V^o_h(s) − Q^o_h(s, a⁻_h(s))`.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    pub fn nearest_state(&self, s: &[f64]) -> usize {
        self.states.nearest(s)
    }

    pub fn worst_action(&self, h: usize, s: &[f64]) -> ActionVec {
        let idx = self.worst_index(h, self.nearest_state(s));
        ActionVec::new(self.actions.point(idx))
    }
}

/// Builds the planner tables by backward induction over the grid.
pub fn plan(
    env: &dyn Environment,
    target: &TargetPolicySpec,
    res: PlannerResolution,
    exec: Execution,
) -> Result<PlannerGrid> {
    let spec = env.spec();
    let m = model(env);
    let states = PointLattice::new(spec.state.clone(), res.state_points)?;
    let actions = PointLattice::new(spec.action.clone(), res.action_points)?;
    if actions.len() > u32::MAX as usize {
        return Err(Error::config("action grid too large"));
    }
    let (horizon, ns, na) = (spec.horizon, states.len(), actions.len());
    let action_points: Vec<Vec<f64>> = (0..na).map(|j| actions.point(j)).collect();

    let mut q = vec![0.0; horizon * ns * na];
    let mut in_target = vec![false; horizon * ns * na];
    let mut v = vec![0.0; horizon * ns];
    let mut worst = vec![0u32; horizon * ns];
    let mut best = vec![0u32; horizon * ns];

    for h in (1..=horizon).rev() {
        let layer = (h - 1) * ns * na;
        let next_v: Option<&[f64]> = (h < horizon).then(|| &v[h * ns..(h + 1) * ns]);
        exec.fill_chunks(&mut in_target[layer..layer + ns * na], na, |i, row| {
            let s = StateVec::new(states.point(i));
            let goal = target.action(h, &s);
            for (flag, a) in row.iter_mut().zip(&action_points) {
                *flag = target.contains_around(&goal, a);
            }
        });
        let (q_head, _) = q.split_at_mut(layer + ns * na);
        exec.fill_chunks(&mut q_head[layer..], na, |i, row| {
            let s = states.point(i);
            let mut next = vec![0.0; s.len()];
            for (out, a) in row.iter_mut().zip(&action_points) {
                let (raw, terminal) = m.apply(&s, a, &mut next);
                let future = match next_v {
                    Some(nv) if !terminal => nv[states.nearest(&next)],
                    _ => 0.0,
                };
                *out = spec.normalize_reward(raw) + future;
            }
        });
        for i in 0..ns {
            let row = &q[layer + i * na..layer + (i + 1) * na];
            let mask = &in_target[layer + i * na..layer + (i + 1) * na];
            let mut best_j = None;
            let mut worst_j = 0;
            for j in 0..na {
                if mask[j] && best_j.is_none_or(|b: usize| row[j] > row[b]) {
                    best_j = Some(j);
                }
                if row[j] < row[worst_j] {
                    worst_j = j;
                }
            }
            let best_j = best_j.ok_or_else(|| {
                Error::config(format!(
                    "action grid too coarse: no grid action within the target radius at h={h}, state {:?}",
                    states.point(i)
                ))
            })?;
            v[(h - 1) * ns + i] = row[best_j];
            best[(h - 1) * ns + i] = best_j as u32;
            worst[(h - 1) * ns + i] = worst_j as u32;
        }
    }

    let mut min_gap = f64::INFINITY;
    let mut arg = (1, 0);
    for h in 1..=horizon {
        for i in 0..ns {
            let k = (h - 1) * ns + i;
            let gap = v[k] - q[k * na + worst[k] as usize];
            if gap < min_gap {
                min_gap = gap;
                arg = (h, i);
            }
        }
    }
    if !(min_gap > 0.0) {
        return Err(Error::TargetPolicyWorst {
            gap: min_gap,
            h: arg.0,
            cell: arg.1,
        });
    }

    Ok(PlannerGrid {
        horizon,
        states,
        actions,
        q,
        in_target,
        v,
        worst,
        best,
        min_gap,
    })
}
