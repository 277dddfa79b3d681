use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp, Momentum};
use super::{Agent, AgentSnapshot, Experience, GreedyPolicy};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::types::{ActionVec, BoxRegion, EnvSpec, StateVec};

/// Hyperparameters of the DDPG-style agent. None of them are tuned beyond
/// "learns the slider at desk scale".
#[derive(Clone, Debug, PartialEq)]
pub struct ActorCriticConfig {
    pub hidden: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Soft target-update coefficient.
    pub tau: f64,
    /// Gaussian exploration noise, as a fraction of the action half-width.
    pub noise: f64,
    /// Transitions collected before gradient steps start.
    pub warmup_steps: usize,
    pub zero_output_init: bool,
}

impl Default for ActorCriticConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            actor_lr: 1e-3,
            critic_lr: 1e-2,
            momentum: 0.9,
            batch_size: 32,
            buffer_capacity: 100_000,
            tau: 0.01,
            noise: 0.2,
            warmup_steps: 500,
            zero_output_init: false,
        }
    }
}

impl ActorCriticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.batch_size == 0 || self.buffer_capacity == 0 {
            return Err(Error::config("actorcritic sizes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.tau) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config(
                "actorcritic needs tau in [0,1] and momentum in [0,1)",
            ));
        }
        if self.actor_lr < 0.0 || self.critic_lr < 0.0 || self.noise < 0.0 {
            return Err(Error::config(
                "actorcritic rates and noise must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Maps states and step indices onto `[-1, 1]` network inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Encoder {
    state: BoxRegion,
    action: BoxRegion,
    horizon: usize,
}

impl Encoder {
    fn features(&self, h: usize, s: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = s
            .iter()
            .enumerate()
            .map(|(i, v)| 2.0 * (v - self.state.lo()[i]) / self.state.width(i) - 1.0)
            .collect();
        let phase = if self.horizon > 1 {
            2.0 * (h - 1) as f64 / (self.horizon - 1) as f64 - 1.0
        } else {
            0.0
        };
        x.push(phase);
        x
    }

    fn feature_dim(&self) -> usize {
        self.state.dim() + 1
    }

    /// Network output in `[-1, 1]^d` to an action in the box.
    fn decode(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, v)| {
                let half = 0.5 * self.action.width(i);
                (self.action.lo()[i] + half + half * v)
                    .clamp(self.action.lo()[i], self.action.hi()[i])
            })
            .collect()
    }

    fn encode_action(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .enumerate()
            .map(|(i, v)| 2.0 * (v - self.action.lo()[i]) / self.action.width(i) - 1.0)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Sample {
    features: Vec<f64>,
    action: Vec<f64>,
    reward: f64,
    /// `None` when the episode ends after this step.
    next_features: Option<Vec<f64>>,
}

/// Trained actor, enough to act greedily.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCriticSnapshot {
    encoder: Encoder,
    actor: Mlp,
}

impl GreedyPolicy for ActorCriticSnapshot {
    fn greedy(&self, h: usize, s: &StateVec) -> ActionVec {
        let z = self.actor.forward(&self.encoder.features(h, s));
        ActionVec::new(self.encoder.decode(&z))
    }
}

/// Minimal deterministic actor-critic with replay and soft target networks.
#[derive(Clone, Debug)]
pub struct ActorCriticAgent {
    config: ActorCriticConfig,
    encoder: Encoder,
    reward_lo: f64,
    reward_hi: f64,
    actor: Mlp,
    critic: Mlp,
    actor_target: Mlp,
    critic_target: Mlp,
    actor_opt: Momentum,
    critic_opt: Momentum,
    replay: Vec<Sample>,
    replay_next: usize,
    rng: Rng,
    noise: Normal<f64>,
}

impl ActorCriticAgent {
    pub fn new(spec: &EnvSpec, config: ActorCriticConfig, mut rng: Rng) -> Result<Self> {
        config.validate()?;
        let encoder = Encoder {
            state: spec.state.clone(),
            action: spec.action.clone(),
            horizon: spec.horizon,
        };
        let fd = encoder.feature_dim();
        let ad = spec.action_dim();
        let hidden = config.hidden;
        let mut actor = Mlp::new(&[fd, hidden, hidden, ad], Activation::Tanh, &mut rng);
        if config.zero_output_init {
            actor.zero_output_layer();
        }
        let critic = Mlp::new(
            &[fd + ad, hidden, hidden, 1],
            Activation::Identity,
            &mut rng,
        );
        let noise = Normal::new(0.0, config.noise.max(f64::MIN_POSITIVE))
            .map_err(|e| Error::config(format!("noise: {e}")))?;
        Ok(Self {
            actor_opt: Momentum::new(actor.params().len(), config.actor_lr, config.momentum),
            critic_opt: Momentum::new(critic.params().len(), config.critic_lr, config.momentum),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            encoder,
            reward_lo: spec.reward_lo,
            reward_hi: spec.reward_hi,
            replay: Vec::new(),
            replay_next: 0,
            config,
            rng,
            noise,
        })
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critic(&self) -> &Mlp {
        &self.critic
    }

    pub fn replay_len(&self) -> usize {
        self.replay.len()
    }

    fn critic_input(features: &[f64], action: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(features.len() + action.len());
        x.extend_from_slice(features);
        x.extend_from_slice(action);
        x
    }

    /// Mean squared TD error over `batch` (halved) and its gradient in the
    /// critic parameters.
    pub(crate) fn critic_loss_and_grad(&self, batch: &[&Sample]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.critic.params().len()];
        let mut loss = 0.0;
        let n = batch.len() as f64;
        for s in batch {
            let target = s.reward
                + s.next_features.as_ref().map_or(0.0, |nf| {
                    let a = self.actor_target.forward(nf);
                    self.critic_target.forward(&Self::critic_input(nf, &a))[0]
                });
            let acts = self
                .critic
                .forward_cached(&Self::critic_input(&s.features, &s.action));
            let err = acts.last().unwrap()[0] - target;
            loss += 0.5 * err * err / n;
            self.critic.backward(&acts, &[err / n], &mut grad);
        }
        (loss, grad)
    }

    /// Negated mean critic value of the actor's actions and its gradient in
    /// the actor parameters (gradient flows through the critic's action input).
    pub(crate) fn actor_loss_and_grad(&self, batch: &[&Sample]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.actor.params().len()];
        let mut scratch = vec![0.0; self.critic.params().len()];
        let n = batch.len() as f64;
        let fd = self.encoder.feature_dim();
        let mut loss = 0.0;
        for s in batch {
            let a_acts = self.actor.forward_cached(&s.features);
            let action = a_acts.last().unwrap();
            let c_acts = self
                .critic
                .forward_cached(&Self::critic_input(&s.features, action));
            loss -= c_acts.last().unwrap()[0] / n;
            let input_grad = self.critic.backward(&c_acts, &[-1.0 / n], &mut scratch);
            self.actor.backward(&a_acts, &input_grad[fd..], &mut grad);
        }
        (loss, grad)
    }

    fn train_step(&mut self) {
        let batch_idx: Vec<usize> = (0..self.config.batch_size)
            .map(|_| self.rng.random_range(0..self.replay.len()))
            .collect();
        let (_, cgrad) = {
            let batch: Vec<&Sample> = batch_idx.iter().map(|&i| &self.replay[i]).collect();
            self.critic_loss_and_grad(&batch)
        };
        self.critic_opt.step(self.critic.params_mut(), &cgrad);
        let (_, agrad) = {
            let batch: Vec<&Sample> = batch_idx.iter().map(|&i| &self.replay[i]).collect();
            self.actor_loss_and_grad(&batch)
        };
        self.actor_opt.step(self.actor.params_mut(), &agrad);
        self.actor_target
            .soft_update_from(&self.actor, self.config.tau);
        self.critic_target
            .soft_update_from(&self.critic, self.config.tau);
    }

    fn push(&mut self, sample: Sample) {
        if self.replay.len() < self.config.buffer_capacity {
            self.replay.push(sample);
        } else {
            self.replay[self.replay_next] = sample;
        }
        self.replay_next = (self.replay_next + 1) % self.config.buffer_capacity;
    }
}

impl GreedyPolicy for ActorCriticAgent {
    fn greedy(&self, h: usize, s: &StateVec) -> ActionVec {
        let z = self.actor.forward(&self.encoder.features(h, s));
        ActionVec::new(self.encoder.decode(&z))
    }
}

impl Agent for ActorCriticAgent {
    fn act(&mut self, h: usize, s: &StateVec, explore: bool) -> ActionVec {
        let mut z = self.actor.forward(&self.encoder.features(h, s));
        if explore && self.config.noise > 0.0 {
            for v in &mut z {
                *v = (*v + self.noise.sample(&mut self.rng)).clamp(-1.0, 1.0);
            }
        }
        ActionVec::new(self.encoder.decode(&z))
    }

    fn observe(&mut self, exp: &Experience<'_>) {
        let reward =
            ((exp.reward - self.reward_lo) / (self.reward_hi - self.reward_lo)).clamp(0.0, 1.0);
        let next_features = (!exp.terminal && exp.h < self.encoder.horizon)
            .then(|| self.encoder.features(exp.h + 1, exp.next_state));
        let sample = Sample {
            features: self.encoder.features(exp.h, exp.state),
            action: self.encoder.encode_action(exp.action),
            reward,
            next_features,
        };
        self.push(sample);
        if self.replay.len() >= self.config.warmup_steps.max(self.config.batch_size) {
            self.train_step();
        }
    }

    fn snapshot(&self) -> AgentSnapshot {
        AgentSnapshot::ActorCritic(ActorCriticSnapshot {
            encoder: self.encoder.clone(),
            actor: self.actor.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{Environment, SliderEnv, VehicleEnv};
    use crate::rng::{stream, Stream};

    fn small(spec: &EnvSpec) -> ActorCriticAgent {
        let config = ActorCriticConfig {
            hidden: 8,
            ..ActorCriticConfig::default()
        };
        ActorCriticAgent::new(spec, config, stream(4, Stream::Agent)).unwrap()
    }

    fn fixed_batch(agent: &ActorCriticAgent, rng: &mut Rng) -> Vec<Sample> {
        (0..6)
            .map(|i| {
                let s = [rng.random_range(-1.0..1.0)];
                let next = [rng.random_range(-1.0..1.0)];
                Sample {
                    features: agent.encoder.features(1 + i % 3, &s),
                    action: vec![rng.random_range(-1.0..1.0)],
                    reward: rng.random_range(0.0..1.0),
                    next_features: (i % 2 == 0).then(|| agent.encoder.features(2 + i % 3, &next)),
                }
            })
            .collect()
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs().max(b.abs()).max(1e-3))
    }

    #[test]
    fn critic_and_actor_gradients_match_finite_differences() {
        let env = SliderEnv::new();
        let mut rng = stream(77, Stream::Agent);
        for trial in 0..3 {
            let mut agent = small(env.spec());
            // Move target nets away from online nets so both paths matter.
            for p in agent.critic_target.params_mut() {
                *p += rng.random_range(-0.1..0.1);
            }
            let batch_owned = fixed_batch(&agent, &mut rng);
            let batch: Vec<&Sample> = batch_owned.iter().collect();
            let eps = 1e-6;

            let (_, grad) = agent.critic_loss_and_grad(&batch);
            for i in 0..agent.critic.params().len() {
                let mut plus = agent.clone();
                plus.critic.params_mut()[i] += eps;
                let mut minus = agent.clone();
                minus.critic.params_mut()[i] -= eps;
                let fd = (plus.critic_loss_and_grad(&batch).0
                    - minus.critic_loss_and_grad(&batch).0)
                    / (2.0 * eps);
                assert!(
                    rel_err(grad[i], fd) < 1e-4,
                    "trial {trial} critic {i}: {} vs {fd}",
                    grad[i]
                );
            }

            let (_, grad) = agent.actor_loss_and_grad(&batch);
            for i in 0..agent.actor.params().len() {
                let mut plus = agent.clone();
                plus.actor.params_mut()[i] += eps;
                let mut minus = agent.clone();
                minus.actor.params_mut()[i] -= eps;
                let fd = (plus.actor_loss_and_grad(&batch).0 - minus.actor_loss_and_grad(&batch).0)
                    / (2.0 * eps);
                assert!(
                    rel_err(grad[i], fd) < 1e-4,
                    "trial {trial} actor {i}: {} vs {fd}",
                    grad[i]
                );
            }
        }
    }

    #[test]
    fn zero_output_actor_acts_at_box_center() {
        let env = VehicleEnv::new(2);
        let config = ActorCriticConfig {
            zero_output_init: true,
            ..ActorCriticConfig::default()
        };
        let mut agent =
            ActorCriticAgent::new(env.spec(), config, stream(1, Stream::Agent)).unwrap();
        let a = agent.act(1, &StateVec::from([1.0, 7.0]), false);
        assert_eq!(a.coords(), &[0.0, 0.0]);
    }

    #[test]
    fn actions_stay_in_bounds_with_noise() {
        let env = SliderEnv::new();
        let config = ActorCriticConfig {
            noise: 3.0,
            ..ActorCriticConfig::default()
        };
        let mut agent =
            ActorCriticAgent::new(env.spec(), config, stream(1, Stream::Agent)).unwrap();
        for i in 0..500 {
            let s = StateVec::from([-1.0 + i as f64 * 0.004]);
            let a = agent.act(1 + i % 10, &s, true);
            assert!(env.spec().action.contains(&a));
        }
    }

    #[test]
    fn replay_is_bounded_and_greedy_is_deterministic() {
        let env = SliderEnv::new();
        let config = ActorCriticConfig {
            hidden: 8,
            buffer_capacity: 50,
            warmup_steps: 10,
            batch_size: 4,
            ..ActorCriticConfig::default()
        };
        let mut agent =
            ActorCriticAgent::new(env.spec(), config, stream(2, Stream::Agent)).unwrap();
        let s = StateVec::from([0.1]);
        for i in 0..120 {
            let a = agent.act(1, &s, true);
            let t = env.step(&s, &a).unwrap();
            agent.observe(&Experience {
                h: 1 + i % 10,
                state: &s,
                action: &a,
                reward: t.reward,
                next_state: &t.next_state,
                terminal: t.terminal,
            });
        }
        assert_eq!(agent.replay_len(), 50);
        let g1 = agent.act(3, &s, false);
        let g2 = agent.act(3, &s, false);
        assert_eq!(g1, g2);
        let AgentSnapshot::ActorCritic(snap) = agent.snapshot() else {
            unreachable!()
        };
        assert_eq!(snap.greedy(3, &s), g1);
    }
}
