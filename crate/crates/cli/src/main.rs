use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adversarl::envs::EnvKind;
use adversarl::harness::{self, Summary};
use adversarl::{Error, Execution, RunConfig};
use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

/// Action-manipulation attacks on continuous-control RL.
#[derive(Parser, Debug)]
#[command(name = "adversarl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train an agent under attack and write metrics, tree dumps and a summary.
    Run {
        /// Config file of `key = value` lines.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config key; may be repeated.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (the run directory, or the parent of the
        /// per-seed directories with --jobs).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output root used when --out is absent.
        #[arg(long, env = "ADVERSARL_OUT", hide_env_values = true)]
        out_root: Option<PathBuf>,
        /// Run this many consecutive seeds in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Recompute the similarity score of a finished run.
    Eval {
        run_dir: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-validate node-count bounds and |alpha|/|tau| accounting of a run.
    Check { run_dir: PathBuf },
}

/// Exit status 2: the request itself was wrong.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: Error) -> anyhow::Error {
    match e {
        Error::Config(_) | Error::Parse { .. } => Usage(e.to_string()).into(),
        other => other.into(),
    }
}

/// True if some `key = value` line (or override) assigns `env`.
fn names_env<'a>(lines: impl IntoIterator<Item = &'a str>) -> bool {
    lines.into_iter().any(|l| {
        let l = l.split('#').next().unwrap_or("");
        l.split_once('=').is_some_and(|(k, _)| k.trim() == "env")
    })
}

fn load_config(path: Option<&Path>, set: &[String], seed: Option<u64>) -> Result<RunConfig> {
    let (mut cfg, mut has_env) = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Usage(format!("cannot read {}: {e}", p.display())))?;
            (
                RunConfig::parse(&text).map_err(usage)?,
                names_env(text.lines()),
            )
        }
        None => (RunConfig::default(), false),
    };
    has_env |= names_env(set.iter().map(String::as_str));
    if !has_env {
        return Err(Usage(format!(
            "no environment given; set env in the config or with --set env=NAME (valid envs: {})",
            EnvKind::ALL.map(EnvKind::name).join(", ")
        ))
        .into());
    }
    for pair in set {
        cfg.set_pair(pair).map_err(usage)?;
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn print_summary(dir: &Path, s: &Summary) {
    println!("run directory     {}", dir.display());
    println!("env/agent/attack  {}/{}/{}", s.env, s.agent, s.attacker);
    println!("episodes          {} (warm-up {})", s.episodes, s.warmup);
    println!("cum tau / alpha   {} / {}", s.cum_tau, s.cum_alpha);
    println!(
        "attack rate       first decile {:.4}, last decile {:.4}, ratio {:.3}",
        s.sublinearity.first_decile_rate,
        s.sublinearity.last_decile_rate,
        s.sublinearity.decile_ratio
    );
    println!(
        "log-log slope     {:.3} (second half)",
        s.sublinearity.loglog_slope_second_half
    );
    println!(
        "similarity        {:.4} over {} steps",
        s.similarity, s.similarity_steps
    );
    println!(
        "greedy reward     {:.4} (target policy {:.4})",
        s.greedy_mean_reward, s.target_mean_reward
    );
    if let Some(ok) = s.node_bound_ok {
        println!(
            "node bound        {} ({} nodes)",
            if ok { "ok" } else { "EXCEEDED" },
            s.total_nodes
        );
    }
    if let Some(gap) = s.min_gap {
        println!("min gap           {gap:.4}");
    }
    if let Some(t) = &s.time_share {
        println!("attacker time     {:.2}%", 100.0 * t.final_share);
    }
    for w in &s.warnings {
        println!("warning           {w}");
    }
}

fn cmd_run(
    config: Option<PathBuf>,
    set: Vec<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    out_root: Option<PathBuf>,
    jobs: usize,
) -> Result<ExitCode> {
    let cfg = load_config(config.as_deref(), &set, seed)?;
    if jobs == 0 {
        return Err(Usage("--jobs must be at least 1".into()).into());
    }
    let dir = out.unwrap_or_else(|| {
        out_root
            .unwrap_or_else(|| PathBuf::from("runs"))
            .join(format!("{}-{}-{}", cfg.env, cfg.attacker, cfg.seed))
    });
    if jobs == 1 {
        let outcome = harness::run_experiment(&cfg, Some(&dir), Execution::default())?;
        print_summary(&dir, &outcome.summary);
        return Ok(ExitCode::SUCCESS);
    }
    let mut failed = false;
    for (sub, res) in harness::run_seeds(&cfg, jobs, &dir, Execution::default()) {
        match res {
            Ok(summary) => print_summary(&sub, &summary),
            Err(e) => {
                failed = true;
                eprintln!("{}: {e}", sub.display());
            }
        }
        println!();
    }
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_eval(run_dir: &Path, steps: Option<usize>, seed: Option<u64>) -> Result<ExitCode> {
    let score = harness::eval_run_dir(run_dir, steps, seed, Execution::default())
        .with_context(|| format!("evaluating {}", run_dir.display()))?;
    println!("similarity {score:.6}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(run_dir: &Path) -> Result<ExitCode> {
    let report = harness::check_run_dir(run_dir)
        .with_context(|| format!("checking {}", run_dir.display()))?;
    println!(
        "checked {} metric rows and {} node counts",
        report.rows,
        report.node_checks.len()
    );
    if report.passed() {
        println!("all checks passed");
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &report.failures {
            println!("FAIL {f}");
        }
        Ok(ExitCode::from(1))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            set,
            seed,
            out,
            out_root,
            jobs,
        } => cmd_run(config, set, seed, out, out_root, jobs),
        Command::Eval {
            run_dir,
            steps,
            seed,
        } => cmd_eval(&run_dir, steps, seed),
        Command::Check { run_dir } => cmd_check(&run_dir),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
