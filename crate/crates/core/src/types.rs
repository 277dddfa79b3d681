//! Value types shared by environments, agents and attackers.

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! point_newtype {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
        pub struct $name(Vec<f64>);

        impl $name {
            pub fn new(coords: Vec<f64>) -> Self {
                Self(coords)
            }

            pub fn zeros(dim: usize) -> Self {
                Self(vec![0.0; dim])
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn coords(&self) -> &[f64] {
                &self.0
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl Index<usize> for $name {
            type Output = f64;

            fn index(&self, i: usize) -> &f64 {
                &self.0[i]
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl<const N: usize> From<[f64; N]> for $name {
            fn from(v: [f64; N]) -> Self {
                Self(v.to_vec())
            }
        }
    };
}

point_newtype!(
    /// A point in an environment's state space.
    StateVec
);
point_newtype!(
    /// A point in an environment's action space.
    ActionVec
);

/// Euclidean distance between two actions.
pub fn distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(euclidean(a, b))
}

/// Euclidean distance without the dimension check; callers guarantee equal lengths.
#[inline]
pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Axis-aligned box `[lo_i, hi_i]` per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::contract("box must have at least one axis"));
        }
        if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] < hi[i])) {
            return Err(Error::contract(format!(
                "box axis {i} has lo={} >= hi={}",
                lo[i], hi[i]
            )));
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    /// Euclidean diameter (length of the main diagonal).
    pub fn diameter(&self) -> f64 {
        euclidean(&self.lo, &self.hi)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, h)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*l, *h);
        }
    }

    /// Splits at the midpoint of `axis` into (lower half, upper half).
    pub fn bisect(&self, axis: usize) -> (BoxRegion, BoxRegion) {
        let mid = 0.5 * (self.lo[axis] + self.hi[axis]);
        let mut lower = self.clone();
        let mut upper = self.clone();
        lower.hi[axis] = mid;
        upper.lo[axis] = mid;
        (lower, upper)
    }

    pub(crate) fn check(&self, what: &'static str, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.contains(x) {
            return Err(Error::OutOfBounds {
                what,
                detail: format!("{x:?} not in {:?}..{:?}", self.lo, self.hi),
            });
        }
        Ok(())
    }
}

/// Static description of an environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub state: BoxRegion,
    pub action: BoxRegion,
    pub horizon: usize,
    pub reward_lo: f64,
    pub reward_hi: f64,
}

impl EnvSpec {
    pub fn new(
        state: BoxRegion,
        action: BoxRegion,
        horizon: usize,
        reward_lo: f64,
        reward_hi: f64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::contract("horizon must be at least 1"));
        }
        if !(reward_lo < reward_hi) {
            return Err(Error::contract("reward range must satisfy lo < hi"));
        }
        Ok(Self {
            state,
            action,
            horizon,
            reward_lo,
            reward_hi,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state.dim()
    }

    pub fn action_dim(&self) -> usize {
        self.action.dim()
    }

    /// Affine map of a raw reward from `[reward_lo, reward_hi]` onto `[0, 1]`.
    #[inline]
    pub fn normalize_reward(&self, raw: f64) -> f64 {
        ((raw - self.reward_lo) / (self.reward_hi - self.reward_lo)).clamp(0.0, 1.0)
    }
}

/// One step of an episode as seen by the harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 1-based step index.
    pub h: usize,
    pub state: StateVec,
    pub agent_action: ActionVec,
    pub submitted_action: ActionVec,
    pub reward: f64,
    pub attacked: bool,
    pub in_target_space: bool,
    pub terminal: bool,
}

impl StepRecord {
    /// Checks the attacked/submitted/in-target consistency rules.
    ///
    /// `attacked` marks an intervention. A substitute that happens to equal
    /// the agent's own action still counts as one, so only pass-through
    /// steps are required to submit the agent's action unchanged.
    pub fn validate(&self) -> Result<()> {
        if !self.attacked && self.submitted_action != self.agent_action {
            return Err(Error::Invariant {
                invariant: "pass-through submits the agent action",
                detail: format!("h={}", self.h),
            });
        }
        if self.attacked && self.in_target_space {
            return Err(Error::Invariant {
                invariant: "no attack on in-target actions",
                detail: format!("h={}", self.h),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub episode: usize,
    pub steps: Vec<StepRecord>,
}

impl Trajectory {
    pub fn new(episode: usize) -> Self {
        Self {
            episode,
            steps: Vec::new(),
        }
    }

    pub fn validate(&self, horizon: usize) -> Result<()> {
        if self.steps.len() > horizon {
            return Err(Error::contract(format!(
                "trajectory has {} steps, horizon is {horizon}",
                self.steps.len()
            )));
        }
        for (i, step) in self.steps.iter().enumerate() {
            if step.h != i + 1 {
                return Err(Error::contract(format!(
                    "step {i} carries index {} (expected {})",
                    step.h,
                    i + 1
                )));
            }
            if step.terminal && i + 1 != self.steps.len() {
                return Err(Error::contract("terminal step is not last"));
            }
            step.validate()?;
        }
        Ok(())
    }

    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        let d = distance(&[0.5], &[0.44]).unwrap();
        assert!(d <= 0.0625);
        assert!(matches!(
            distance(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn box_rejects_degenerate_axis() {
        assert!(BoxRegion::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(BoxRegion::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn bisect_partitions_box() {
        let b = BoxRegion::cube(2, -1.0, 1.0).unwrap();
        let (l, u) = b.bisect(1);
        assert_eq!(l.hi(), &[1.0, 0.0]);
        assert_eq!(u.lo(), &[-1.0, 0.0]);
        assert_eq!(l.lo(), b.lo());
        assert_eq!(u.hi(), b.hi());
    }

    #[test]
    fn normalize_reward_maps_range() {
        let spec = EnvSpec::new(
            BoxRegion::cube(1, -1.0, 1.0).unwrap(),
            BoxRegion::cube(1, -1.0, 1.0).unwrap(),
            10,
            -1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(spec.normalize_reward(-1.0), 0.0);
        assert_eq!(spec.normalize_reward(1.0), 1.0);
        assert_eq!(spec.normalize_reward(0.0), 0.5);
    }

    #[test]
    fn step_record_consistency() {
        let mut rec = StepRecord {
            h: 1,
            state: StateVec::from([0.0]),
            agent_action: ActionVec::from([0.5]),
            submitted_action: ActionVec::from([0.5]),
            reward: 0.5,
            attacked: false,
            in_target_space: false,
            terminal: false,
        };
        rec.validate().unwrap();
        rec.submitted_action = ActionVec::from([-1.0]);
        assert!(rec.validate().is_err());
        rec.attacked = true;
        rec.validate().unwrap();
        rec.in_target_space = true;
        assert!(rec.validate().is_err());
    }
}
