use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{Agent, AgentSnapshot, Experience, GreedyPolicy};
use crate::error::{Error, Result};
use crate::grid::{PointLattice, UniformCells};
use crate::rng::Rng;
use crate::types::{ActionVec, BoxRegion, EnvSpec, StateVec};

#[derive(Clone, Debug, PartialEq)]
pub struct GridQConfig {
    pub state_bins: usize,
    pub action_bins: usize,
    /// Constant step size of the tabular update, in `[0, 1]`.
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_min: f64,
    /// Episodes over which ε decays linearly from start to min.
    pub epsilon_decay_episodes: usize,
    /// Start every entry at its largest possible value `H - h + 1` instead
    /// of zero, so untried actions get tried greedily.
    pub optimistic_init: bool,
    /// Use step size `max(1/n, learning_rate)` where `n` counts updates of
    /// the entry (a running mean until the floor is reached).
    pub visit_decay: bool,
}

impl Default for GridQConfig {
    fn default() -> Self {
        Self {
            state_bins: 16,
            action_bins: 17,
            learning_rate: 0.1,
            epsilon_start: 1.0,
            epsilon_min: 0.01,
            epsilon_decay_episodes: 5_000,
            optimistic_init: true,
            visit_decay: true,
        }
    }
}

impl GridQConfig {
    pub fn validate(&self) -> Result<()> {
        if self.state_bins == 0 || self.action_bins < 2 {
            return Err(Error::config(
                "gridq needs state_bins >= 1 and action_bins >= 2",
            ));
        }
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::config("gridq.lr must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start)
            || !(self.epsilon_min > 0.0 && self.epsilon_min <= self.epsilon_start)
        {
            return Err(Error::config(
                "gridq epsilon schedule needs 0 < epsilon_min <= epsilon_start <= 1",
            ));
        }
        Ok(())
    }

    /// ε used during episode `k` (1-based).
    pub fn epsilon(&self, k: usize) -> f64 {
        if self.epsilon_decay_episodes == 0 {
            return self.epsilon_min;
        }
        let frac = k.saturating_sub(1) as f64 / self.epsilon_decay_episodes as f64;
        if frac >= 1.0 {
            return self.epsilon_min;
        }
        self.epsilon_start + (self.epsilon_min - self.epsilon_start) * frac
    }
}

/// Q-table over `(h, state bin, action lattice point)` on normalized rewards,
/// so every entry stays in `[0, H]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawTable", into = "RawTable")]
pub struct GridQTable {
    horizon: usize,
    reward_lo: f64,
    reward_hi: f64,
    states: UniformCells,
    actions: PointLattice,
    q: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawTable {
    horizon: usize,
    reward_lo: f64,
    reward_hi: f64,
    state_region: BoxRegion,
    state_bins: usize,
    action_region: BoxRegion,
    action_bins: usize,
    q: Vec<f64>,
}

impl From<GridQTable> for RawTable {
    fn from(t: GridQTable) -> Self {
        RawTable {
            horizon: t.horizon,
            reward_lo: t.reward_lo,
            reward_hi: t.reward_hi,
            state_region: t.states.region().clone(),
            state_bins: t.states.per_axis(),
            action_region: t.actions.region().clone(),
            action_bins: t.actions.per_axis(),
            q: t.q,
        }
    }
}

impl From<RawTable> for GridQTable {
    fn from(r: RawTable) -> Self {
        GridQTable {
            horizon: r.horizon,
            reward_lo: r.reward_lo,
            reward_hi: r.reward_hi,
            states: UniformCells::new(r.state_region, r.state_bins).expect("valid snapshot"),
            actions: PointLattice::new(r.action_region, r.action_bins).expect("valid snapshot"),
            q: r.q,
        }
    }
}

impl GridQTable {
    pub fn new(spec: &EnvSpec, state_bins: usize, action_bins: usize) -> Result<Self> {
        let states = UniformCells::new(spec.state.clone(), state_bins)?;
        let actions = PointLattice::new(spec.action.clone(), action_bins)?;
        let len = spec
            .horizon
            .checked_mul(states.len())
            .and_then(|n| n.checked_mul(actions.len()))
            .ok_or_else(|| Error::config("gridq table too large"))?;
        Ok(Self {
            horizon: spec.horizon,
            reward_lo: spec.reward_lo,
            reward_hi: spec.reward_hi,
            states,
            actions,
            q: vec![0.0; len],
        })
    }

    pub fn states(&self) -> &UniformCells {
        &self.states
    }

    pub fn actions(&self) -> &PointLattice {
        &self.actions
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    fn row(&self, h: usize, cell: usize) -> usize {
        ((h - 1) * self.states.len() + cell) * self.actions.len()
    }

    pub fn values(&self, h: usize, cell: usize) -> &[f64] {
        let start = self.row(h, cell);
        &self.q[start..start + self.actions.len()]
    }

    pub fn get(&self, h: usize, cell: usize, action: usize) -> f64 {
        self.q[self.row(h, cell) + action]
    }

    pub fn set(&mut self, h: usize, cell: usize, action: usize, value: f64) {
        let i = self.row(h, cell) + action;
        self.q[i] = value;
    }

    /// Greedy action index; ties resolve to the lowest index.
    pub fn argmax(&self, h: usize, cell: usize) -> usize {
        let mut best = 0;
        let vals = self.values(h, cell);
        for (i, v) in vals.iter().enumerate().skip(1) {
            if *v > vals[best] {
                best = i;
            }
        }
        best
    }

    pub fn max(&self, h: usize, cell: usize) -> f64 {
        self.values(h, cell)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn normalize(&self, raw: f64) -> f64 {
        ((raw - self.reward_lo) / (self.reward_hi - self.reward_lo)).clamp(0.0, 1.0)
    }
}

impl GreedyPolicy for GridQTable {
    fn greedy(&self, h: usize, s: &StateVec) -> ActionVec {
        let cell = self.states.index(s);
        ActionVec::new(self.actions.point(self.argmax(h, cell)))
    }
}

/// ε-greedy tabular Q-learning on a uniform state/action discretization.
#[derive(Clone, Debug)]
pub struct GridQAgent {
    config: GridQConfig,
    table: GridQTable,
    visits: Vec<u32>,
    rng: Rng,
    episode: usize,
    epsilon: f64,
}

impl GridQAgent {
    pub fn new(spec: &EnvSpec, config: GridQConfig, rng: Rng) -> Result<Self> {
        config.validate()?;
        let mut table = GridQTable::new(spec, config.state_bins, config.action_bins)?;
        if config.optimistic_init {
            let per_step = table.states.len() * table.actions.len();
            for (i, q) in table.q.iter_mut().enumerate() {
                *q = (table.horizon - i / per_step) as f64;
            }
        }
        let visits = if config.visit_decay {
            vec![0; table.q.len()]
        } else {
            Vec::new()
        };
        let epsilon = config.epsilon(1);
        Ok(Self {
            config,
            table,
            visits,
            rng,
            episode: 1,
            epsilon,
        })
    }

    pub fn table(&self) -> &GridQTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut GridQTable {
        &mut self.table
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Overrides the exploration rate until the next episode boundary.
    pub fn set_epsilon(&mut self, epsilon: f64) {
        self.epsilon = epsilon;
    }
}

impl GreedyPolicy for GridQAgent {
    fn greedy(&self, h: usize, s: &StateVec) -> ActionVec {
        self.table.greedy(h, s)
    }
}

impl Agent for GridQAgent {
    fn act(&mut self, h: usize, s: &StateVec, explore: bool) -> ActionVec {
        if explore && self.rng.random::<f64>() < self.epsilon {
            let idx = self.rng.random_range(0..self.table.actions.len());
            return ActionVec::new(self.table.actions.point(idx));
        }
        self.table.greedy(h, s)
    }

    fn observe(&mut self, exp: &Experience<'_>) {
        let table = &mut self.table;
        let cell = table.states.index(exp.state);
        let action = table.actions.nearest(exp.action);
        let mut lr = self.config.learning_rate;
        if self.config.visit_decay {
            let n = &mut self.visits[table.row(exp.h, cell) + action];
            *n = n.saturating_add(1);
            lr = lr.max(1.0 / f64::from(*n));
        }
        let bootstrap = if exp.terminal || exp.h >= table.horizon {
            0.0
        } else {
            table.max(exp.h + 1, table.states.index(exp.next_state))
        };
        let target = table.normalize(exp.reward) + bootstrap;
        let old = table.get(exp.h, cell, action);
        table.set(exp.h, cell, action, old + lr * (target - old));
    }

    fn end_episode(&mut self, k: usize) {
        self.episode = k + 1;
        self.epsilon = self.config.epsilon(self.episode);
    }

    fn snapshot(&self) -> AgentSnapshot {
        AgentSnapshot::GridQ(self.table.clone())
    }
}
