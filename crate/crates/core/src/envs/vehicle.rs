use std::sync::Arc;

use rand::Rng as _;

use super::{EnvKind, Environment};
use crate::error::Result;
use crate::rng::Rng;
use crate::target::{TargetPolicy, TargetPolicySpec};
use crate::types::{euclidean, ActionVec, BoxRegion, EnvSpec, StateVec};

const SIDE: f64 = 8.0;
const CENTER: f64 = 4.0;
/// Radius of the ball around the center that the target policy avoids.
pub const KEEP_OUT_RADIUS: f64 = 1.0;

/// A point vehicle in `[0, 8]^dim` moved by `a ∈ [-1, 1]^dim`, paid
/// `max(0, 1 - ‖s' - c‖ / (4√dim))` for its distance to the center `c`.
/// Moves that would leave the box are clamped to it.
#[derive(Clone, Debug)]
pub struct VehicleEnv {
    spec: EnvSpec,
    center: Vec<f64>,
    max_distance: f64,
}

impl VehicleEnv {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "vehicle needs at least one axis");
        let spec = EnvSpec::new(
            BoxRegion::cube(dim, 0.0, SIDE).expect("valid box"),
            BoxRegion::cube(dim, -1.0, 1.0).expect("valid box"),
            10,
            0.0,
            1.0,
        )
        .expect("valid spec");
        Self {
            spec,
            center: vec![CENTER; dim],
            max_distance: 0.5 * SIDE * (dim as f64).sqrt(),
        }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Reward paid for arriving at `next`.
    pub fn reward_at(&self, next: &[f64]) -> f64 {
        (1.0 - euclidean(next, &self.center) / self.max_distance).max(0.0)
    }
}

impl Environment for VehicleEnv {
    fn kind(&self) -> EnvKind {
        match self.spec.state_dim() {
            2 => EnvKind::Vehicle2,
            5 => EnvKind::Vehicle5,
            d => panic!("no EnvKind for a {d}-dimensional vehicle"),
        }
    }

    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, rng: &mut Rng) -> StateVec {
        let dim = self.spec.state_dim();
        loop {
            let s: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..=SIDE)).collect();
            if euclidean(&s, &self.center) > KEEP_OUT_RADIUS {
                return StateVec::new(s);
            }
        }
    }

    fn apply(&self, s: &[f64], a: &[f64], next: &mut [f64]) -> (f64, bool) {
        for ((n, x), d) in next.iter_mut().zip(s).zip(a) {
            *n = (x + d).clamp(0.0, SIDE);
        }
        (self.reward_at(next), false)
    }

    fn target_policy(&self, radius: f64) -> Result<TargetPolicySpec> {
        TargetPolicySpec::new(
            Arc::new(VehicleTarget {
                center: self.center.clone(),
            }),
            radius,
        )
    }
}

/// Heads for the point at distance 1 from the center on the ray through the
/// current state, clipping each axis to the action box. Never enters the
/// keep-out ball.
#[derive(Clone, Debug)]
pub struct VehicleTarget {
    center: Vec<f64>,
}

impl TargetPolicy for VehicleTarget {
    fn action(&self, _h: usize, s: &StateVec) -> ActionVec {
        let dist = euclidean(s, &self.center);
        let mut a = vec![0.0; s.dim()];
        if dist == 0.0 {
            a[0] = KEEP_OUT_RADIUS.min(1.0);
            return ActionVec::new(a);
        }
        if (dist - KEEP_OUT_RADIUS).abs() <= 1e-12 {
            return ActionVec::new(a);
        }
        let scale = KEEP_OUT_RADIUS / dist;
        for ((out, x), c) in a.iter_mut().zip(s.iter()).zip(&self.center) {
            let goal = c + (x - c) * scale;
            *out = (goal - x).clamp(-1.0, 1.0);
        }
        ActionVec::new(a)
    }

    fn name(&self) -> &str {
        "vehicle-ring"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::Model;
    use crate::rng::{stream, Stream};

    #[test]
    fn reset_outside_keep_out_ball() {
        let env = VehicleEnv::new(2);
        let mut rng = stream(42, Stream::EnvReset);
        for _ in 0..2000 {
            let s = env.reset(&mut rng);
            assert!(euclidean(&s, &[4.0, 4.0]) > 1.0);
            assert!(env.spec().state.contains(&s));
        }
        assert_eq!(
            env.reset(&mut stream(42, Stream::EnvReset)),
            env.reset(&mut stream(42, Stream::EnvReset))
        );
    }

    #[test]
    fn reward_max_at_center_and_zero_at_corner() {
        let env = VehicleEnv::new(2);
        let model = Model::of(&env);
        assert_eq!(model.reward(&[4.0, 4.0], &[0.0, 0.0]), 1.0);
        assert_eq!(env.reward_at(&[0.0, 0.0]), 0.0);
        assert_eq!(VehicleEnv::new(5).reward_at(&[8.0; 5]), 0.0);
    }

    #[test]
    fn transitions_clamp_to_box() {
        let env = VehicleEnv::new(2);
        let t = env
            .step(&StateVec::from([7.5, 0.2]), &ActionVec::from([1.0, -1.0]))
            .unwrap();
        assert_eq!(t.next_state.coords(), &[8.0, 0.0]);
    }

    #[test]
    fn reward_strictly_decreases_with_distance() {
        let env = VehicleEnv::new(2);
        let mut rng = stream(5, Stream::Agent);
        for _ in 0..10_000 {
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r1: f64 = rng.random_range(0.0..5.0);
            let r2: f64 = rng.random_range(0.0..5.0);
            let at = |r: f64| [4.0 + r * theta.cos(), 4.0 + r * theta.sin()];
            let (p1, p2) = (at(r1), at(r2));
            if !env.spec().state.contains(&p1) || !env.spec().state.contains(&p2) {
                continue;
            }
            if (r1 - r2).abs() < 1e-9 {
                continue;
            }
            let (near, far) = if r1 < r2 { (p1, p2) } else { (p2, p1) };
            assert!(env.reward_at(&near) > env.reward_at(&far));
        }
    }

    #[test]
    fn target_moves_toward_ring_with_clipping() {
        let env = VehicleEnv::new(2);
        let t = env.target_policy(0.31).unwrap();
        let a = t.action(1, &StateVec::from([4.0, 7.0]));
        assert_eq!(a.coords(), &[0.0, -1.0]);
        // Geometry oracle: the unclipped move lands on the ring.
        let a = t.action(1, &StateVec::from([4.0, 5.5]));
        assert!((a[1] + 0.5).abs() < 1e-12 && a[0] == 0.0);
        let a = t.action(1, &StateVec::from([5.0, 4.0]));
        assert_eq!(a.coords(), &[0.0, 0.0]);
    }

    #[test]
    fn target_rollouts_never_enter_keep_out_ball() {
        for dim in [2, 5] {
            let env = VehicleEnv::new(dim);
            let target = env.target_policy(0.3).unwrap();
            let mut rng = stream(8, Stream::EnvReset);
            for _ in 0..1000 {
                let mut s = env.reset(&mut rng);
                for h in 1..=env.spec().horizon {
                    let a = target.action(h, &s);
                    assert!(env.spec().action.contains(&a));
                    s = env.step(&s, &a).unwrap().next_state;
                    assert!(euclidean(&s, env.center()) >= 1.0 - 1e-9);
                }
            }
        }
    }
}
