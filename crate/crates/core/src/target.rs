//! Target policies and the target action space around them.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::types::{euclidean, ActionVec, StateVec};

/// A deterministic policy the attacker wants the agent to follow.
pub trait TargetPolicy: Send + Sync {
    /// Action at 1-based step `h` in state `s`.
    fn action(&self, h: usize, s: &StateVec) -> ActionVec;

    fn name(&self) -> &str {
        "target"
    }
}

impl<F> TargetPolicy for F
where
    F: Fn(usize, &StateVec) -> ActionVec + Send + Sync,
{
    fn action(&self, h: usize, s: &StateVec) -> ActionVec {
        self(h, s)
    }
}

/// Target policy plus the radius of the closed ball of tolerated actions.
///
/// The ball is measured with the Euclidean metric, the same one the cover
/// tree uses for node diameters.
#[derive(Clone)]
pub struct TargetPolicySpec {
    policy: Arc<dyn TargetPolicy>,
    radius: f64,
}

impl fmt::Debug for TargetPolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetPolicySpec")
            .field("policy", &self.policy.name())
            .field("radius", &self.radius)
            .finish()
    }
}

impl TargetPolicySpec {
    pub fn new(policy: Arc<dyn TargetPolicy>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::config(format!(
                "target radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self { policy, radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        Self::new(Arc::clone(&self.policy), radius)
    }

    pub fn policy(&self) -> &dyn TargetPolicy {
        self.policy.as_ref()
    }

    pub fn action(&self, h: usize, s: &StateVec) -> ActionVec {
        self.policy.action(h, s)
    }

    /// Whether `a` lies in the closed ball of radius `r_a` around the target action.
    pub fn contains(&self, h: usize, s: &StateVec, a: &[f64]) -> bool {
        let target = self.policy.action(h, s);
        self.contains_around(&target, a)
    }

    /// Ball test against an already evaluated target action.
    #[inline]
    pub fn contains_around(&self, target: &[f64], a: &[f64]) -> bool {
        euclidean(a, target) <= self.radius
    }
}

/// Free-function form of [`TargetPolicySpec::contains`].
pub fn in_target_space(spec: &TargetPolicySpec, h: usize, s: &StateVec, a: &ActionVec) -> bool {
    spec.contains(h, s, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant(v: f64, r: f64) -> TargetPolicySpec {
        TargetPolicySpec::new(
            Arc::new(move |_h: usize, _s: &StateVec| ActionVec::from([v])),
            r,
        )
        .unwrap()
    }

    #[test]
    fn closed_ball_boundary() {
        let spec = constant(0.0, 0.25);
        let s = StateVec::from([0.0]);
        assert!(in_target_space(&spec, 1, &s, &ActionVec::from([0.0])));
        assert!(in_target_space(&spec, 1, &s, &ActionVec::from([0.25])));
        assert!(!in_target_space(
            &spec,
            1,
            &s,
            &ActionVec::from([0.25 + 1e-9])
        ));
    }

    #[test]
    fn radius_must_be_positive() {
        let p: Arc<dyn TargetPolicy> = Arc::new(|_h: usize, _s: &StateVec| ActionVec::from([0.0]));
        assert!(TargetPolicySpec::new(p.clone(), 0.0).is_err());
        assert!(TargetPolicySpec::new(p, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn membership_depends_only_on_distance(
            cx in -1.0f64..1.0, cy in -1.0f64..1.0,
            ax in -1.0f64..1.0, ay in -1.0f64..1.0,
            theta in 0.0f64..std::f64::consts::TAU,
        ) {
            let spec = TargetPolicySpec::new(
                Arc::new(move |_h: usize, _s: &StateVec| ActionVec::from([cx, cy])),
                0.3,
            ).unwrap();
            let s = StateVec::from([0.0, 0.0]);
            let r = ((ax - cx).powi(2) + (ay - cy).powi(2)).sqrt();
            let rotated = ActionVec::from([cx + r * theta.cos(), cy + r * theta.sin()]);
            let a = ActionVec::from([ax, ay]);
            // Rotation perturbs the radius by rounding only; skip the knife edge.
            prop_assume!((r - 0.3).abs() > 1e-12);
            prop_assert_eq!(spec.contains(1, &s, &a), spec.contains(1, &s, &rotated));
        }
    }
}
