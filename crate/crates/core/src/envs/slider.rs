use rand::Rng as _;

use super::{EnvKind, Environment};
use crate::error::Result;
use crate::rng::Rng;
use crate::target::{TargetPolicy, TargetPolicySpec};
use crate::types::{ActionVec, BoxRegion, EnvSpec, StateVec};

/// A slider on a rod `[-1, 1]`. Action `a` moves the slider by `2a` and pays
/// `|a|`; leaving the rod ends the episode with reward `-1`.
#[derive(Clone, Debug)]
pub struct SliderEnv {
    spec: EnvSpec,
}

/// Half-width of the region the target policy keeps the slider in.
pub const SAFE_HALF_WIDTH: f64 = 0.7;
const FALL_REWARD: f64 = -1.0;

impl SliderEnv {
    pub fn new() -> Self {
        let spec = EnvSpec::new(
            BoxRegion::cube(1, -1.0, 1.0).expect("valid box"),
            BoxRegion::cube(1, -1.0, 1.0).expect("valid box"),
            10,
            -1.0,
            1.0,
        )
        .expect("valid spec");
        Self { spec }
    }
}

impl Default for SliderEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl Environment for SliderEnv {
    fn kind(&self) -> EnvKind {
        EnvKind::Slider
    }

    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, rng: &mut Rng) -> StateVec {
        StateVec::from([rng.random_range(-SAFE_HALF_WIDTH..=SAFE_HALF_WIDTH)])
    }

    fn apply(&self, s: &[f64], a: &[f64], next: &mut [f64]) -> (f64, bool) {
        let moved = s[0] + 2.0 * a[0];
        if moved.abs() > 1.0 {
            next[0] = moved.clamp(-1.0, 1.0);
            (FALL_REWARD, true)
        } else {
            next[0] = moved;
            (a[0].abs(), false)
        }
    }

    fn target_policy(&self, radius: f64) -> Result<TargetPolicySpec> {
        TargetPolicySpec::new(std::sync::Arc::new(SliderTarget), radius)
    }
}

/// Moves to whichever edge of `[-0.7, 0.7]` is farther; ties go right.
#[derive(Clone, Copy, Debug, Default)]
pub struct SliderTarget;

impl TargetPolicy for SliderTarget {
    fn action(&self, _h: usize, s: &StateVec) -> ActionVec {
        let left = (-SAFE_HALF_WIDTH - s[0]) / 2.0;
        let right = (SAFE_HALF_WIDTH - s[0]) / 2.0;
        let a = if right.abs() >= left.abs() {
            right
        } else {
            left
        };
        ActionVec::from([a.clamp(-1.0, 1.0)])
    }

    fn name(&self) -> &str {
        "slider-edges"
    }
}
