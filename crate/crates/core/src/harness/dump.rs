//! Line-oriented text dumps of the LCBT cover trees.
//!
//! ```text
//! # lcbt-trees k=200 M=16 H=10 nu1=2 rho=0.5 delta1=0.05
//! <h> <D> <I> <lo,..> <hi,..> [<m>:<T>:<qhat> ...]
//! ```
//!
//! One node per line; only cells with a nonzero count are listed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::attack::{ConfidenceParams, LcbtAttacker};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DumpNode {
    pub h: usize,
    pub depth: u32,
    pub index: u64,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub stats: Vec<(usize, u64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeDump {
    pub episode: usize,
    pub cells: usize,
    pub horizon: usize,
    pub nu1: f64,
    pub rho: f64,
    pub delta1: f64,
    pub nodes: Vec<DumpNode>,
}

impl TreeDump {
    pub fn from_attacker(att: &LcbtAttacker, episode: usize) -> Self {
        let p: &ConfidenceParams = att.params();
        let mut nodes = Vec::new();
        for (i, tree) in att.trees().iter().enumerate() {
            for n in tree.nodes() {
                nodes.push(DumpNode {
                    h: i + 1,
                    depth: n.depth,
                    index: n.index,
                    lo: n.region.lo().to_vec(),
                    hi: n.region.hi().to_vec(),
                    stats: n
                        .stats
                        .iter()
                        .filter(|(_, s)| s.count > 0)
                        .map(|(m, s)| (*m, s.count, s.qhat))
                        .collect(),
                });
            }
        }
        Self {
            episode,
            cells: p.cells,
            horizon: p.horizon,
            nu1: p.nu1,
            rho: p.rho,
            delta1: p.delta1,
            nodes,
        }
    }

    /// `|T^h|` for `h = 1..=H`.
    pub fn nodes_per_step(&self) -> Vec<usize> {
        let mut counts = vec![0; self.horizon];
        for n in &self.nodes {
            if (1..=self.horizon).contains(&n.h) {
                counts[n.h - 1] += 1;
            }
        }
        counts
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "# lcbt-trees k={} M={} H={} nu1={} rho={} delta1={}",
            self.episode, self.cells, self.horizon, self.nu1, self.rho, self.delta1
        );
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        for n in &self.nodes {
            let _ = write!(
                s,
                "{} {} {} {} {}",
                n.h,
                n.depth,
                n.index,
                join(&n.lo),
                join(&n.hi)
            );
            for (m, t, q) in &n.stats {
                let _ = write!(s, " {m}:{t}:{q}");
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, detail: &str| Error::Parse {
            what: "tree dump",
            detail: format!("line {line}: {detail}"),
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| bad(1, "empty dump"))?;
        let rest = header
            .strip_prefix("# lcbt-trees")
            .ok_or_else(|| bad(1, "missing header"))?;
        let mut fields = std::collections::HashMap::new();
        for tok in rest.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| bad(1, "malformed header field"))?;
            fields.insert(k, v);
        }
        fn field<T: std::str::FromStr>(
            f: &std::collections::HashMap<&str, &str>,
            k: &str,
        ) -> Option<T> {
            f.get(k).and_then(|v| v.parse().ok())
        }
        let missing = |k: &str| bad(1, &format!("missing or bad header field {k}"));
        let mut dump = TreeDump {
            episode: field(&fields, "k").ok_or_else(|| missing("k"))?,
            cells: field(&fields, "M").ok_or_else(|| missing("M"))?,
            horizon: field(&fields, "H").ok_or_else(|| missing("H"))?,
            nu1: field(&fields, "nu1").ok_or_else(|| missing("nu1"))?,
            rho: field(&fields, "rho").ok_or_else(|| missing("rho"))?,
            delta1: field(&fields, "delta1").ok_or_else(|| missing("delta1"))?,
            nodes: Vec::new(),
        };
        let floats =
            |s: &str| -> Option<Vec<f64>> { s.split(',').map(|x| x.parse().ok()).collect() };
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 5 {
                return Err(bad(i + 1, "expected h D I lo hi"));
            }
            let node = (|| {
                Some(DumpNode {
                    h: toks[0].parse().ok()?,
                    depth: toks[1].parse().ok()?,
                    index: toks[2].parse().ok()?,
                    lo: floats(toks[3])?,
                    hi: floats(toks[4])?,
                    stats: toks[5..]
                        .iter()
                        .map(|t| {
                            let mut it = t.split(':');
                            Some((
                                it.next()?.parse().ok()?,
                                it.next()?.parse().ok()?,
                                it.next()?.parse().ok()?,
                            ))
                        })
                        .collect::<Option<Vec<_>>>()?,
                })
            })()
            .ok_or_else(|| bad(i + 1, "malformed node"))?;
            dump.nodes.push(node);
        }
        Ok(dump)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(dump_file_name(self.episode));
        fs::write(&path, self.to_text())?;
        Ok(path)
    }
}

pub fn dump_file_name(episode: usize) -> String {
    format!("trees-k{episode:07}.txt")
}

/// All dumps in `dir`, ordered by episode.
pub fn read_dumps(dir: &Path) -> Result<Vec<TreeDump>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    let mut dumps = paths
        .iter()
        .map(|p| TreeDump::parse(&fs::read_to_string(p)?))
        .collect::<Result<Vec<_>>>()?;
    dumps.sort_by_key(|d| d.episode);
    Ok(dumps)
}
