//! Experiment orchestration: the agent–attacker–environment loop, metrics,
//! checkpoints and on-disk artifacts.

mod check;
mod dump;
mod metrics;
mod reports;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use check::{check_run_dir, CheckReport};
pub use dump::{dump_file_name, read_dumps, DumpNode, TreeDump};
pub use metrics::{
    accounting_violations, read_csv, write_csv, Checkpoint, EpisodeMetrics, RunMetrics, CSV_HEADER,
};
pub use reports::{
    evaluate_policy, node_bound, node_growth_check, similarity_test, sublinearity_report,
    time_share_report, BoundParams, NodeCheck, SublinearityReport, TimeShareReport,
};

use crate::agents::{ActorCriticAgent, Agent, AgentKind, AgentSnapshot, Experience, GridQAgent};
use crate::attack::{
    plan, Attacker, AttackerKind, LcbtAttacker, NoAttack, OracleAttacker, PlannerCache,
    SampledPlanner, WorstActionSource,
};
use crate::config::RunConfig;
use crate::envs::Environment;
use crate::error::Result;
use crate::exec::Execution;
use crate::rng::{stream, Stream};
use crate::target::TargetPolicySpec;
use crate::types::StateVec;

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const AGENT_FILE: &str = "agent.json";
pub const CONFIG_FILE: &str = "config.cfg";
pub const TREES_DIR: &str = "trees";

/// Key results of a run, written as `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub env: String,
    pub agent: String,
    pub attacker: String,
    pub episodes: usize,
    pub seed: u64,
    pub horizon: usize,
    pub radius: f64,
    /// Last warm-up episode; rows up to here were never attacked.
    pub warmup: usize,
    pub cum_tau: u64,
    pub cum_alpha: u64,
    pub alpha_tau_ok: bool,
    pub sublinearity: SublinearityReport,
    pub similarity: f64,
    pub similarity_steps: usize,
    /// Mean raw reward of the trained greedy policy without attacks.
    pub greedy_mean_reward: f64,
    pub target_mean_reward: f64,
    /// Mean raw training reward over the last (up to) 1000 episodes.
    pub final_train_reward: f64,
    pub total_nodes: usize,
    pub node_bound_ok: Option<bool>,
    pub node_bound_failures: Vec<NodeCheck>,
    pub min_gap: Option<f64>,
    pub time_share: Option<TimeShareReport>,
    pub warnings: Vec<String>,
}

pub struct RunOutcome {
    pub config: RunConfig,
    pub metrics: RunMetrics,
    pub summary: Summary,
    pub agent: AgentSnapshot,
    /// Final trees of an LCBT run.
    pub final_trees: Option<TreeDump>,
}

fn build_agent(cfg: &RunConfig, env: &dyn Environment) -> Result<Box<dyn Agent>> {
    let rng = stream(cfg.seed, Stream::Agent);
    Ok(match cfg.agent {
        AgentKind::GridQ => Box::new(GridQAgent::new(env.spec(), cfg.gridq.clone(), rng)?),
        AgentKind::ActorCritic => Box::new(ActorCriticAgent::new(env.spec(), cfg.ac.clone(), rng)?),
        AgentKind::External => unreachable!("rejected by validate"),
    })
}

/// Worst-action source for the oracle: a grid plan where affordable,
/// sampling otherwise.
pub fn build_worst_source(
    cfg: &RunConfig,
    env: &Arc<dyn Environment>,
    target: &TargetPolicySpec,
    exec: Execution,
) -> Result<Arc<dyn WorstActionSource>> {
    Ok(match cfg.planner_resolution() {
        Some(res) => {
            let grid = match &cfg.planner_cache {
                Some(dir) => {
                    PlannerCache::new(dir).load_or_plan(env.as_ref(), target, res, exec)?
                }
                None => plan(env.as_ref(), target, res, exec)?,
            };
            Arc::new(grid)
        }
        None => Arc::new(SampledPlanner::new(
            Arc::clone(env),
            target.clone(),
            cfg.planner_samples,
            cfg.seed,
        )?),
    })
}

/// Runs one experiment; with `out` set, writes all artifacts there.
pub fn run_experiment(cfg: &RunConfig, out: Option<&Path>, exec: Execution) -> Result<RunOutcome> {
    cfg.validate()?;
    let agent = build_agent(cfg, cfg.env.build().as_ref())?;
    run_experiment_with(cfg, agent, out, exec)
}

/// [`run_experiment`] with a caller-supplied agent; the config's agent
/// settings are ignored.
pub fn run_experiment_with(
    cfg: &RunConfig,
    mut agent: Box<dyn Agent>,
    out: Option<&Path>,
    exec: Execution,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let env = cfg.env.build();
    let spec = env.spec().clone();
    let horizon = spec.horizon;
    let target = env.target_policy(cfg.radius())?;
    let mut warnings = Vec::new();
    let mut min_gap = None;
    let mut attacker: Box<dyn Attacker> = match cfg.attacker {
        AttackerKind::None => Box::new(NoAttack),
        AttackerKind::Oracle => {
            let source = build_worst_source(cfg, &env, &target, exec)?;
            min_gap = source.min_gap();
            Box::new(OracleAttacker::new(source, target.clone(), cfg.warmup))
        }
        AttackerKind::Lcbt => Box::new(LcbtAttacker::new(&spec, target.clone(), cfg.lcbt())?),
    };
    if let (Some(lcbt), Some(gap)) = (attacker.as_lcbt(), min_gap) {
        if lcbt.params().state_slack >= gap / 2.0 {
            warnings.push(format!(
                "state cell slack {} is not below half the minimum gap {gap}",
                lcbt.params().state_slack
            ));
        }
    }

    // An absent attacker costs nothing by definition; don't time it.
    let timing = cfg.timing && attacker.kind() != AttackerKind::None;
    let trees_dir = out.map(|o| o.join(TREES_DIR));
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(CONFIG_FILE), cfg.to_text())?;
    }

    let cadence = (cfg.episodes / cfg.checkpoints).max(1);
    let mut env_rng = stream(cfg.seed, Stream::EnvReset);
    let mut metrics = RunMetrics {
        horizon,
        warmup: cfg.warmup,
        ..RunMetrics::default()
    };
    let (mut cum_tau, mut cum_alpha) = (0u64, 0u64);
    let (mut attacker_time, mut total_time) = (Duration::ZERO, Duration::ZERO);
    let timed = |on: bool, acc: &mut Duration, f: &mut dyn FnMut()| {
        if on {
            let t0 = Instant::now();
            f();
            *acc += t0.elapsed();
        } else {
            f();
        }
    };
    let mut next = vec![0.0; spec.state_dim()];

    for k in 1..=cfg.episodes {
        let t_episode = cfg.timing.then(Instant::now);
        let mut s = env.reset(&mut env_rng);
        let (mut attacks, mut oot) = (0u64, 0u64);
        let (mut reward_raw, mut reward_norm) = (0.0, 0.0);
        for h in 1..=horizon {
            let a = agent.act(h, &s, true);
            if !target.contains(h, &s, &a) {
                oot += 1;
            }
            let mut decision = None;
            timed(timing, &mut attacker_time, &mut || {
                decision = Some(attacker.intercept(k, h, &s, &a));
            });
            let decision = decision.expect("intercept ran");
            if decision.attacked {
                attacks += 1;
            }
            spec.state.check("state", &s)?;
            spec.action.check("submitted action", &decision.action)?;
            let (r, terminal) = env.apply(&s, &decision.action, &mut next);
            let next_state = StateVec::new(next.clone());
            agent.observe(&Experience {
                h,
                state: &s,
                action: &a,
                reward: r,
                next_state: &next_state,
                terminal,
            });
            let rn = spec.normalize_reward(r);
            attacker.observe_reward(h, rn);
            reward_raw += r;
            reward_norm += rn;
            if terminal {
                break;
            }
            s = next_state;
        }
        let mut end = Ok(());
        timed(timing, &mut attacker_time, &mut || {
            end = attacker.end_episode(k)
        });
        end?;
        agent.end_episode(k);
        if let Some(t0) = t_episode {
            total_time += t0.elapsed();
        }

        cum_tau += attacks;
        cum_alpha += oot;
        let share = cfg
            .timing
            .then(|| attacker_time.as_secs_f64() / total_time.as_secs_f64().max(f64::MIN_POSITIVE));
        metrics.episodes.push(EpisodeMetrics {
            episode: k,
            reward_raw,
            reward_norm,
            attacks,
            out_of_target: oot,
            cum_tau,
            cum_alpha,
            total_nodes: attacker.total_nodes(),
            attacker_time_share: share,
        });
        if k % cadence == 0 || k == cfg.episodes {
            let nodes_per_step = match attacker.as_lcbt() {
                Some(lcbt) => {
                    let dump = TreeDump::from_attacker(lcbt, k);
                    if let Some(dir) = &trees_dir {
                        dump.write(dir)?;
                    }
                    dump.nodes_per_step()
                }
                None => Vec::new(),
            };
            metrics.checkpoints.push(Checkpoint {
                episode: k,
                nodes_per_step,
                attacker_time_share: share,
            });
        }
    }

    let snapshot = agent.snapshot();
    let similarity = similarity_test(
        agent.as_ref(),
        env.as_ref(),
        &target,
        cfg.similarity_steps,
        cfg.seed,
        exec,
    );
    let greedy_mean_reward = evaluate_policy(
        agent.as_ref(),
        env.as_ref(),
        cfg.eval_episodes,
        cfg.seed,
        exec,
    );
    let target_mean_reward =
        evaluate_policy(&target, env.as_ref(), cfg.eval_episodes, cfg.seed, exec);
    let tail = &metrics.episodes[metrics.episodes.len().saturating_sub(1000)..];
    let final_train_reward = tail.iter().map(|e| e.reward_raw).sum::<f64>() / tail.len() as f64;

    let (node_bound_ok, node_bound_failures, final_trees) = match attacker.as_lcbt() {
        Some(lcbt) => {
            let p = lcbt.params();
            let checks = node_growth_check(
                &metrics.checkpoints,
                BoundParams {
                    horizon,
                    cells: p.cells,
                    nu1: p.nu1,
                    rho: p.rho,
                    delta1: p.delta1,
                },
            );
            let failures: Vec<NodeCheck> = checks.into_iter().filter(|c| !c.pass).collect();
            (
                Some(failures.is_empty()),
                failures,
                Some(TreeDump::from_attacker(lcbt, cfg.episodes)),
            )
        }
        None => (None, Vec::new(), None),
    };

    let summary = Summary {
        env: cfg.env.to_string(),
        agent: cfg.agent.to_string(),
        attacker: cfg.attacker.to_string(),
        episodes: cfg.episodes,
        seed: cfg.seed,
        horizon,
        radius: cfg.radius(),
        warmup: cfg.warmup,
        cum_tau,
        cum_alpha,
        alpha_tau_ok: accounting_violations(&metrics.episodes, horizon, cfg.warmup).is_empty(),
        sublinearity: sublinearity_report(&metrics.episodes, horizon, cfg.warmup),
        similarity,
        similarity_steps: cfg.similarity_steps,
        greedy_mean_reward,
        target_mean_reward,
        final_train_reward,
        total_nodes: attacker.total_nodes(),
        node_bound_ok,
        node_bound_failures,
        min_gap,
        time_share: time_share_report(&metrics.checkpoints),
        warnings,
    };

    if let Some(dir) = out {
        metrics.write_csv(fs::File::create(dir.join(METRICS_FILE))?)?;
        fs::write(
            dir.join(SUMMARY_FILE),
            serde_json::to_string_pretty(&summary)?,
        )?;
        fs::write(dir.join(AGENT_FILE), serde_json::to_string(&snapshot)?)?;
    }

    Ok(RunOutcome {
        config: cfg.clone(),
        metrics,
        summary,
        agent: snapshot,
        final_trees,
    })
}

/// Runs `jobs` seeds `seed, seed+1, ...` side by side, each into `root/seed-<n>`.
pub fn run_seeds(
    cfg: &RunConfig,
    jobs: usize,
    root: &Path,
    exec: Execution,
) -> Vec<(PathBuf, Result<Summary>)> {
    exec.map_range(jobs, |i| {
        let mut c = cfg.clone();
        c.seed = cfg.seed + i as u64;
        let dir = root.join(format!("seed-{}", c.seed));
        // Inner loops stay sequential; the seeds are the parallel axis.
        let res = run_experiment(&c, Some(&dir), Execution::Sequential).map(|o| o.summary);
        (dir, res)
    })
}

/// Similarity of a saved run's agent, recomputed from its directory.
pub fn eval_run_dir(
    dir: &Path,
    steps: Option<usize>,
    seed: Option<u64>,
    exec: Execution,
) -> Result<f64> {
    let cfg = RunConfig::parse(&fs::read_to_string(dir.join(CONFIG_FILE))?)?;
    let snapshot: AgentSnapshot = serde_json::from_str(&fs::read_to_string(dir.join(AGENT_FILE))?)?;
    let env = cfg.env.build();
    let target = env.target_policy(cfg.radius())?;
    let policy = snapshot.into_policy();
    Ok(similarity_test(
        policy.as_ref(),
        env.as_ref(),
        &target,
        steps.unwrap_or(cfg.similarity_steps),
        seed.unwrap_or(cfg.seed),
        exec,
    ))
}
