//! Per-episode metrics and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "episode,reward_raw,reward_norm,attacks,out_of_target,cum_tau,cum_alpha,total_nodes,attacker_time_share";

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub reward_raw: f64,
    pub reward_norm: f64,
    /// Interventions this episode (`τ` increments).
    pub attacks: u64,
    /// Steps whose agent action left the target space (`α` increments).
    pub out_of_target: u64,
    pub cum_tau: u64,
    pub cum_alpha: u64,
    pub total_nodes: usize,
    /// Cumulative attacker share of wall time; empty unless timing is on.
    pub attacker_time_share: Option<f64>,
}

/// Node counts per step at a checkpoint episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub episode: usize,
    pub nodes_per_step: Vec<usize>,
    pub attacker_time_share: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunMetrics {
    pub horizon: usize,
    pub warmup: usize,
    pub episodes: Vec<EpisodeMetrics>,
    pub checkpoints: Vec<Checkpoint>,
}

impl RunMetrics {
    pub fn cum_tau(&self) -> u64 {
        self.episodes.last().map_or(0, |e| e.cum_tau)
    }

    pub fn cum_alpha(&self) -> u64 {
        self.episodes.last().map_or(0, |e| e.cum_alpha)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_csv(&self.episodes, out)
    }
}

pub fn write_csv<W: Write>(rows: &[EpisodeMetrics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<EpisodeMetrics>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Parse {
            what: "metrics csv",
            detail: format!("unexpected header '{}'", header.join(",")),
        });
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse {
        what: "metrics csv",
        detail: e.to_string(),
    }
}

/// Problems with the |α|/|τ| accounting in a metrics series.
pub fn accounting_violations(
    rows: &[EpisodeMetrics],
    horizon: usize,
    warmup: usize,
) -> Vec<String> {
    let mut out = Vec::new();
    let (mut tau, mut alpha) = (0u64, 0u64);
    for (i, row) in rows.iter().enumerate() {
        if row.episode != i + 1 {
            out.push(format!(
                "row {}: episode {} out of sequence",
                i + 1,
                row.episode
            ));
        }
        if row.cum_tau < tau || row.cum_alpha < alpha {
            out.push(format!(
                "episode {}: cumulative column decreased",
                row.episode
            ));
        }
        if row.cum_tau != tau + row.attacks || row.cum_alpha != alpha + row.out_of_target {
            out.push(format!(
                "episode {}: cumulative columns do not add up",
                row.episode
            ));
        }
        if row.cum_alpha < row.cum_tau {
            out.push(format!(
                "episode {}: cum_alpha {} < cum_tau {}",
                row.episode, row.cum_alpha, row.cum_tau
            ));
        }
        let slack = (horizon * warmup) as u64;
        if row.cum_alpha > row.cum_tau + slack {
            out.push(format!(
                "episode {}: cum_alpha - cum_tau = {} exceeds H*K = {slack}",
                row.episode,
                row.cum_alpha - row.cum_tau
            ));
        }
        tau = row.cum_tau;
        alpha = row.cum_alpha;
    }
    out
}
