//! Re-validation of a finished run from its artifacts alone.

use std::fs;
use std::path::Path;

use super::dump::read_dumps;
use super::metrics::{accounting_violations, read_csv};
use super::reports::{node_growth_check, BoundParams, NodeCheck};
use super::{Checkpoint, CONFIG_FILE, METRICS_FILE, TREES_DIR};
use crate::config::RunConfig;
use crate::error::Result;

#[derive(Clone, Debug, Default)]
pub struct CheckReport {
    pub rows: usize,
    pub node_checks: Vec<NodeCheck>,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the |α|/|τ| accounting in `metrics.csv` and every tree dump
/// against the node-count bound. Missing or unreadable artifacts are errors;
/// violated checks are listed in the report.
pub fn check_run_dir(dir: &Path) -> Result<CheckReport> {
    let cfg = RunConfig::parse(&fs::read_to_string(dir.join(CONFIG_FILE))?)?;
    let horizon = cfg.env.build().spec().horizon;
    let rows = read_csv(fs::File::open(dir.join(METRICS_FILE))?)?;
    let mut report = CheckReport {
        rows: rows.len(),
        ..CheckReport::default()
    };
    if rows.len() != cfg.episodes {
        report.failures.push(format!(
            "metrics has {} rows, expected {}",
            rows.len(),
            cfg.episodes
        ));
    }
    report
        .failures
        .extend(accounting_violations(&rows, horizon, cfg.warmup));

    let trees = dir.join(TREES_DIR);
    if trees.is_dir() {
        for dump in read_dumps(&trees)? {
            let cp = Checkpoint {
                episode: dump.episode,
                nodes_per_step: dump.nodes_per_step(),
                attacker_time_share: None,
            };
            let params = BoundParams {
                horizon: dump.horizon,
                cells: dump.cells,
                nu1: dump.nu1,
                rho: dump.rho,
                delta1: dump.delta1,
            };
            for c in node_growth_check(&[cp], params) {
                if !c.pass {
                    report.failures.push(format!(
                        "node bound exceeded at h={}, k={}: {} nodes > {:.3}",
                        c.h, c.episode, c.nodes, c.bound
                    ));
                }
                report.node_checks.push(c);
            }
        }
    }
    Ok(report)
}
