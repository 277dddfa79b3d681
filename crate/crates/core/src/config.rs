//! Run configuration as flat `key = value` text.
//!
//! One assignment per line; `#` starts a comment; keys use dots for agent
//! sections (`gridq.lr`). Unknown keys are rejected. Optional values accept
//! `auto` to fall back to the per-environment default.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::agents::{ActorCriticConfig, AgentKind, GridQConfig};
use crate::attack::{AttackerKind, LcbtConfig, PlannerResolution};
use crate::envs::EnvKind;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub env: EnvKind,
    pub agent: AgentKind,
    pub attacker: AttackerKind,
    pub episodes: usize,
    pub seed: u64,
    pub radius: Option<f64>,
    pub warmup: usize,
    pub delta1: f64,
    pub nu1: Option<f64>,
    pub rho: Option<f64>,
    pub cells_per_axis: Option<usize>,
    pub similarity_steps: usize,
    pub eval_episodes: usize,
    /// Measure attacker wall time. Off by default because timings make the
    /// metrics CSV non-reproducible.
    pub timing: bool,
    /// Number of tree-dump / node-count checkpoints over the run.
    pub checkpoints: usize,
    pub planner_state_res: Option<usize>,
    pub planner_action_res: Option<usize>,
    pub planner_samples: usize,
    pub planner_cache: Option<PathBuf>,
    pub gridq: GridQConfig,
    pub ac: ActorCriticConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::Slider,
            agent: AgentKind::GridQ,
            attacker: AttackerKind::Lcbt,
            episodes: 20_000,
            seed: 0,
            radius: None,
            warmup: 0,
            delta1: 0.05,
            nu1: None,
            rho: None,
            cells_per_axis: None,
            similarity_steps: 10_000,
            eval_episodes: 1_000,
            timing: false,
            checkpoints: 100,
            planner_state_res: None,
            planner_action_res: None,
            planner_samples: 4096,
            planner_cache: None,
            gridq: GridQConfig::default(),
            ac: ActorCriticConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("bad value for {key}: '{value}'")))
}

fn parse_auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn show_auto<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_owned(), T::to_string)
}

impl RunConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::config(format!("line {}: {}", n + 1, strip(e))))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override '{pair}' is not key=value")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "env" => self.env = value.parse()?,
            "agent" => self.agent = value.parse()?,
            "attacker" => self.attacker = value.parse()?,
            "episodes" => self.episodes = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "radius" => self.radius = parse_auto(key, value)?,
            "warmup" => self.warmup = parse(key, value)?,
            "delta1" => self.delta1 = parse(key, value)?,
            "nu1" => self.nu1 = parse_auto(key, value)?,
            "rho" => self.rho = parse_auto(key, value)?,
            "cells_per_axis" => self.cells_per_axis = parse_auto(key, value)?,
            "similarity_steps" => self.similarity_steps = parse(key, value)?,
            "eval_episodes" => self.eval_episodes = parse(key, value)?,
            "timing" => self.timing = parse(key, value)?,
            "checkpoints" => self.checkpoints = parse(key, value)?,
            "planner_state_res" => self.planner_state_res = parse_auto(key, value)?,
            "planner_action_res" => self.planner_action_res = parse_auto(key, value)?,
            "planner_samples" => self.planner_samples = parse(key, value)?,
            "planner_cache" => {
                self.planner_cache = (value != "none").then(|| PathBuf::from(value));
            }
            "gridq.state_bins" => self.gridq.state_bins = parse(key, value)?,
            "gridq.action_bins" => self.gridq.action_bins = parse(key, value)?,
            "gridq.lr" => self.gridq.learning_rate = parse(key, value)?,
            "gridq.epsilon_start" => self.gridq.epsilon_start = parse(key, value)?,
            "gridq.epsilon_min" => self.gridq.epsilon_min = parse(key, value)?,
            "gridq.epsilon_decay_episodes" => {
                self.gridq.epsilon_decay_episodes = parse(key, value)?
            }
            "gridq.optimistic_init" => self.gridq.optimistic_init = parse(key, value)?,
            "gridq.visit_decay" => self.gridq.visit_decay = parse(key, value)?,
            "ac.hidden" => self.ac.hidden = parse(key, value)?,
            "ac.actor_lr" => self.ac.actor_lr = parse(key, value)?,
            "ac.critic_lr" => self.ac.critic_lr = parse(key, value)?,
            "ac.momentum" => self.ac.momentum = parse(key, value)?,
            "ac.batch_size" => self.ac.batch_size = parse(key, value)?,
            "ac.buffer_capacity" => self.ac.buffer_capacity = parse(key, value)?,
            "ac.tau" => self.ac.tau = parse(key, value)?,
            "ac.noise" => self.ac.noise = parse(key, value)?,
            "ac.warmup_steps" => self.ac.warmup_steps = parse(key, value)?,
            "ac.zero_output_init" => self.ac.zero_output_init = parse(key, value)?,
            _ => return Err(Error::config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// The effective configuration, one key per line, parseable by [`RunConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("env", self.env.to_string());
        kv("agent", self.agent.to_string());
        kv("attacker", self.attacker.to_string());
        kv("episodes", self.episodes.to_string());
        kv("seed", self.seed.to_string());
        kv("radius", show_auto(&self.radius));
        kv("warmup", self.warmup.to_string());
        kv("delta1", self.delta1.to_string());
        kv("nu1", show_auto(&self.nu1));
        kv("rho", show_auto(&self.rho));
        kv("cells_per_axis", show_auto(&self.cells_per_axis));
        kv("similarity_steps", self.similarity_steps.to_string());
        kv("eval_episodes", self.eval_episodes.to_string());
        kv("timing", self.timing.to_string());
        kv("checkpoints", self.checkpoints.to_string());
        kv("planner_state_res", show_auto(&self.planner_state_res));
        kv("planner_action_res", show_auto(&self.planner_action_res));
        kv("planner_samples", self.planner_samples.to_string());
        kv(
            "planner_cache",
            self.planner_cache
                .as_ref()
                .map_or_else(|| "none".to_owned(), |p| p.display().to_string()),
        );
        kv("gridq.state_bins", self.gridq.state_bins.to_string());
        kv("gridq.action_bins", self.gridq.action_bins.to_string());
        kv("gridq.lr", self.gridq.learning_rate.to_string());
        kv("gridq.epsilon_start", self.gridq.epsilon_start.to_string());
        kv("gridq.epsilon_min", self.gridq.epsilon_min.to_string());
        kv(
            "gridq.epsilon_decay_episodes",
            self.gridq.epsilon_decay_episodes.to_string(),
        );
        kv(
            "gridq.optimistic_init",
            self.gridq.optimistic_init.to_string(),
        );
        kv("gridq.visit_decay", self.gridq.visit_decay.to_string());
        kv("ac.hidden", self.ac.hidden.to_string());
        kv("ac.actor_lr", self.ac.actor_lr.to_string());
        kv("ac.critic_lr", self.ac.critic_lr.to_string());
        kv("ac.momentum", self.ac.momentum.to_string());
        kv("ac.batch_size", self.ac.batch_size.to_string());
        kv("ac.buffer_capacity", self.ac.buffer_capacity.to_string());
        kv("ac.tau", self.ac.tau.to_string());
        kv("ac.noise", self.ac.noise.to_string());
        kv("ac.warmup_steps", self.ac.warmup_steps.to_string());
        kv("ac.zero_output_init", self.ac.zero_output_init.to_string());
        s
    }

    pub fn radius(&self) -> f64 {
        self.radius.unwrap_or_else(|| self.env.default_radius())
    }

    /// `16` bins for the slider, `9` per axis for the vehicles.
    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis.unwrap_or(match self.env {
            EnvKind::Slider => 16,
            EnvKind::Vehicle2 | EnvKind::Vehicle5 => 9,
        })
    }

    pub fn lcbt(&self) -> LcbtConfig {
        LcbtConfig {
            warmup: self.warmup,
            delta1: self.delta1,
            nu1: self.nu1,
            rho: self.rho,
            cells_per_axis: self.cells_per_axis(),
        }
    }

    /// Grid planner resolution, or `None` when the environment is planned by sampling.
    pub fn planner_resolution(&self) -> Option<PlannerResolution> {
        let default = PlannerResolution::default_for(self.env);
        match (default, self.planner_state_res, self.planner_action_res) {
            (None, None, None) => None,
            (d, s, a) => Some(PlannerResolution {
                state_points: s.or(d.map(|d| d.state_points)).unwrap_or(9),
                action_points: a.or(d.map(|d| d.action_points)).unwrap_or(5),
            }),
        }
    }

    /// Rejects inconsistent settings before anything runs.
    pub fn validate(&self) -> Result<()> {
        if self.agent == AgentKind::External {
            return Err(Error::config(
                "agent 'external' is driven through the language bindings, not the built-in harness",
            ));
        }
        if self.episodes == 0 {
            return Err(Error::config("episodes must be at least 1"));
        }
        let r = self.radius();
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::config(format!("radius must be positive, got {r}")));
        }
        if !(self.delta1 > 0.0 && self.delta1 < 1.0) {
            return Err(Error::config("delta1 must lie in (0, 1)"));
        }
        if self.nu1.is_some_and(|v| !(v > 0.0)) {
            return Err(Error::config("nu1 must be positive"));
        }
        if self.rho.is_some_and(|v| !(v > 0.0 && v < 1.0)) {
            return Err(Error::config("rho must lie in (0, 1)"));
        }
        if self.cells_per_axis() == 0 {
            return Err(Error::config("cells_per_axis must be positive"));
        }
        if self.checkpoints == 0 {
            return Err(Error::config("checkpoints must be positive"));
        }
        if self.planner_samples == 0 {
            return Err(Error::config("planner_samples must be positive"));
        }
        match self.agent {
            AgentKind::GridQ => self.gridq.validate(),
            AgentKind::ActorCritic => self.ac.validate(),
            AgentKind::External => unreachable!(),
        }
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(msg) => msg,
        other => other.to_string(),
    }
}
