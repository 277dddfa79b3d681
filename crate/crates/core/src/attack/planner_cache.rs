//! On-disk cache of planner tables keyed by a hash of everything that
//! determines them.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::planner::{plan, PlannerGrid, PlannerResolution};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::grid::PointLattice;
use crate::target::TargetPolicySpec;
use crate::types::BoxRegion;

const FORMAT: &str = "adversarl-planner-v1";

#[derive(Serialize, Deserialize)]
struct Stored {
    format: String,
    horizon: usize,
    state_lo: Vec<f64>,
    state_hi: Vec<f64>,
    state_points: usize,
    action_lo: Vec<f64>,
    action_hi: Vec<f64>,
    action_points: usize,
    q: Vec<f64>,
    in_target: Vec<bool>,
    v: Vec<f64>,
    worst: Vec<u32>,
    best: Vec<u32>,
    min_gap: f64,
}

impl From<&PlannerGrid> for Stored {
    fn from(g: &PlannerGrid) -> Self {
        Stored {
            format: FORMAT.to_owned(),
            horizon: g.horizon,
            state_lo: g.states.region().lo().to_vec(),
            state_hi: g.states.region().hi().to_vec(),
            state_points: g.states.per_axis(),
            action_lo: g.actions.region().lo().to_vec(),
            action_hi: g.actions.region().hi().to_vec(),
            action_points: g.actions.per_axis(),
            q: g.q.clone(),
            in_target: g.in_target.clone(),
            v: g.v.clone(),
            worst: g.worst.clone(),
            best: g.best.clone(),
            min_gap: g.min_gap,
        }
    }
}

impl TryFrom<Stored> for PlannerGrid {
    type Error = Error;

    fn try_from(s: Stored) -> Result<Self> {
        let bad = |detail: &str| Error::Parse {
            what: "planner cache",
            detail: detail.to_owned(),
        };
        if s.format != FORMAT {
            return Err(bad("unknown format tag"));
        }
        let states = PointLattice::new(BoxRegion::new(s.state_lo, s.state_hi)?, s.state_points)?;
        let actions =
            PointLattice::new(BoxRegion::new(s.action_lo, s.action_hi)?, s.action_points)?;
        let hs = s.horizon * states.len();
        let hsa = hs * actions.len();
        if s.q.len() != hsa
            || s.in_target.len() != hsa
            || s.v.len() != hs
            || s.worst.len() != hs
            || s.best.len() != hs
        {
            return Err(bad("table sizes do not match the grid"));
        }
        Ok(PlannerGrid {
            horizon: s.horizon,
            states,
            actions,
            q: s.q,
            in_target: s.in_target,
            v: s.v,
            worst: s.worst,
            best: s.best,
            min_gap: s.min_gap,
        })
    }
}

/// Directory of cached plans.
#[derive(Clone, Debug)]
pub struct PlannerCache {
    dir: PathBuf,
}

impl PlannerCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Hex digest identifying `(env, target, resolution)`.
    pub fn key(env: &dyn Environment, target: &TargetPolicySpec, res: PlannerResolution) -> String {
        let mut h = Sha256::new();
        h.update(FORMAT.as_bytes());
        h.update(env.kind().name().as_bytes());
        h.update(env.spec().horizon.to_le_bytes());
        h.update(target.policy().name().as_bytes());
        h.update(target.radius().to_bits().to_le_bytes());
        h.update(res.state_points.to_le_bytes());
        h.update(res.action_points.to_le_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("plan-{key}.bin"))
    }

    /// Loads the cached plan or builds and stores a fresh one.
    pub fn load_or_plan(
        &self,
        env: &dyn Environment,
        target: &TargetPolicySpec,
        res: PlannerResolution,
        exec: Execution,
    ) -> Result<PlannerGrid> {
        let path = self.path_for(&Self::key(env, target, res));
        if path.exists() {
            if let Ok(grid) = load(&path) {
                return Ok(grid);
            }
        }
        let grid = plan(env, target, res, exec)?;
        fs::create_dir_all(&self.dir)?;
        save(&grid, &path)?;
        Ok(grid)
    }
}

pub fn save(grid: &PlannerGrid, path: &Path) -> Result<()> {
    let bytes = bincode::serde::encode_to_vec(Stored::from(grid), bincode::config::standard())
        .map_err(|e| Error::contract(format!("planner cache encode: {e}")))?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<PlannerGrid> {
    let bytes = fs::read(path)?;
    let (stored, _): (Stored, usize) =
        bincode::serde::decode_from_slice(&bytes, bincode::config::standard()).map_err(|e| {
            Error::Parse {
                what: "planner cache",
                detail: e.to_string(),
            }
        })?;
    stored.try_into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::SliderEnv;

    #[test]
    fn round_trip_and_reuse() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PlannerCache::new(dir.path());
        let env = SliderEnv::new();
        let target = env.target_policy(0.0625).unwrap();
        let res = PlannerResolution {
            state_points: 41,
            action_points: 81,
        };
        let a = cache
            .load_or_plan(&env, &target, res, Execution::default())
            .unwrap();
        let path = cache.path_for(&PlannerCache::key(&env, &target, res));
        assert!(path.exists());
        let b = load(&path).unwrap();
        assert_eq!(a, b);

        let other = PlannerCache::key(&env, &target.with_radius(0.1).unwrap(), res);
        assert_ne!(other, PlannerCache::key(&env, &target, res));
    }

    #[test]
    fn corrupt_file_is_replanned() {
        let dir = tempfile::tempdir().unwrap();
        let cache = PlannerCache::new(dir.path());
        let env = SliderEnv::new();
        let target = env.target_policy(0.0625).unwrap();
        let res = PlannerResolution {
            state_points: 21,
            action_points: 41,
        };
        let path = cache.path_for(&PlannerCache::key(&env, &target, res));
        fs::write(&path, b"garbage").unwrap();
        assert!(load(&path).is_err());
        let grid = cache
            .load_or_plan(&env, &target, res, Execution::Sequential)
            .unwrap();
        assert_eq!(load(&path).unwrap(), grid);
    }
}
