//! Continuous-control environments with white-box model access.
//!
//! Environments hold no episode state: `step` is a pure function of
//! `(s, a)`, and the episode loop lives in the harness.

mod slider;
mod vehicle;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

pub use slider::{SliderEnv, SliderTarget};
pub use vehicle::{VehicleEnv, VehicleTarget};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::target::TargetPolicySpec;
use crate::types::{ActionVec, EnvSpec, StateVec};

/// Result of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub next_state: StateVec,
    pub reward: f64,
    pub terminal: bool,
}

pub trait Environment: Send + Sync + fmt::Debug {
    fn kind(&self) -> EnvKind;

    fn spec(&self) -> &EnvSpec;

    /// Draws an initial state from the environment's init region.
    fn reset(&self, rng: &mut Rng) -> StateVec;

    /// Deterministic dynamics without bounds checks. Writes the next state
    /// into `next` and returns `(raw_reward, terminal)`.
    fn apply(&self, s: &[f64], a: &[f64], next: &mut [f64]) -> (f64, bool);

    /// Built-in analytic target policy with the given ball radius.
    fn target_policy(&self, radius: f64) -> Result<TargetPolicySpec>;

    fn step(&self, s: &StateVec, a: &ActionVec) -> Result<Transition> {
        let spec = self.spec();
        spec.state.check("state", s)?;
        spec.action.check("action", a)?;
        let mut next = vec![0.0; spec.state_dim()];
        let (reward, terminal) = self.apply(s, a, &mut next);
        Ok(Transition {
            next_state: StateVec::new(next),
            reward,
            terminal,
        })
    }
}

/// White-box access to an environment's transition and reward functions.
pub fn model(env: &dyn Environment) -> Model<'_> {
    Model::of(env)
}

/// Pure transition and reward functions of an environment, usable without
/// touching any episode state.
#[derive(Clone, Copy)]
pub struct Model<'a> {
    env: &'a dyn Environment,
}

impl<'a> Model<'a> {
    pub fn of(env: &'a dyn Environment) -> Self {
        Self { env }
    }

    pub fn spec(&self) -> &EnvSpec {
        self.env.spec()
    }

    pub fn transition(&self, s: &[f64], a: &[f64]) -> StateVec {
        let mut next = vec![0.0; s.len()];
        self.env.apply(s, a, &mut next);
        StateVec::new(next)
    }

    pub fn reward(&self, s: &[f64], a: &[f64]) -> f64 {
        let mut next = vec![0.0; s.len()];
        self.env.apply(s, a, &mut next).0
    }

    /// Allocation-free variant returning `(raw_reward, terminal)`.
    #[inline]
    pub fn apply(&self, s: &[f64], a: &[f64], next: &mut [f64]) -> (f64, bool) {
        self.env.apply(s, a, next)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnvKind {
    Slider,
    Vehicle2,
    Vehicle5,
}

impl EnvKind {
    pub const ALL: [EnvKind; 3] = [EnvKind::Slider, EnvKind::Vehicle2, EnvKind::Vehicle5];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Slider => "slider",
            EnvKind::Vehicle2 => "vehicle2",
            EnvKind::Vehicle5 => "vehicle5",
        }
    }

    pub fn build(self) -> Arc<dyn Environment> {
        match self {
            EnvKind::Slider => Arc::new(SliderEnv::new()),
            EnvKind::Vehicle2 => Arc::new(VehicleEnv::new(2)),
            EnvKind::Vehicle5 => Arc::new(VehicleEnv::new(5)),
        }
    }

    /// Target radius used in the reference experiments.
    pub fn default_radius(self) -> f64 {
        match self {
            EnvKind::Slider => 0.0625,
            EnvKind::Vehicle2 => 0.31,
            EnvKind::Vehicle5 => 0.497,
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown env '{s}' (valid envs: slider, vehicle2, vehicle5)"
                ))
            })
    }
}

/// Constructs an environment by name.
pub fn make_env(name: &str) -> Result<Arc<dyn Environment>> {
    Ok(name.parse::<EnvKind>()?.build())
}
