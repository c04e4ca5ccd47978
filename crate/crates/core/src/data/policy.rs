use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scalar::Scalar;
use crate::sim::{rng_from_seed, ControlInput, VehicleState, MAX_CURVATURE, MAX_SPEED, MIN_SPEED};

/// Keeps the explorer inside a disc: outside it, steer hard back toward the centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounce {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Scripted stand-in for joystick exploration: speed and curvature follow
/// independent bounded random walks, resampled every `dwell` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplorationPolicy {
    pub rng_seed: u64,
    pub v_range: [f64; 2],
    pub c_range: [f64; 2],
    /// Standard deviation of one random-walk increment.
    pub v_step: f64,
    pub c_step: f64,
    /// Probability of jumping to a uniform draw instead of walking.
    pub jump_probability: f64,
    pub dwell: f64,
    pub bounce: Option<Bounce>,
}

impl Default for ExplorationPolicy {
    fn default() -> Self {
        ExplorationPolicy {
            rng_seed: 0,
            v_range: [MIN_SPEED, MAX_SPEED],
            c_range: [-MAX_CURVATURE, MAX_CURVATURE],
            v_step: 0.5,
            c_step: 0.6,
            jump_probability: 0.1,
            dwell: 0.5,
            bounce: None,
        }
    }
}

impl ExplorationPolicy {
    /// A policy that holds one command forever.
    pub fn constant(v: f64, c: f64) -> Self {
        ExplorationPolicy {
            v_range: [v, v],
            c_range: [c, c],
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let [v0, v1] = self.v_range;
        let [c0, c1] = self.c_range;
        if !(MIN_SPEED <= v0 && v0 <= v1 && v1 <= MAX_SPEED) {
            return Err(Error::Config(format!("v_range must lie within [{MIN_SPEED}, {MAX_SPEED}]")));
        }
        if !(-MAX_CURVATURE <= c0 && c0 <= c1 && c1 <= MAX_CURVATURE) {
            return Err(Error::Config(format!("c_range must lie within [-{MAX_CURVATURE}, {MAX_CURVATURE}]")));
        }
        if !(self.v_step >= 0.0 && self.c_step >= 0.0) {
            return Err(Error::Config("random-walk steps must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.jump_probability) {
            return Err(Error::Config("jump_probability must lie in [0, 1]".into()));
        }
        if !(self.dwell > 0.0) {
            return Err(Error::Config("dwell must be > 0".into()));
        }
        if let Some(b) = &self.bounce {
            if !(b.radius > 0.0) {
                return Err(Error::Config("bounce radius must be > 0".into()));
            }
        }
        Ok(())
    }

    pub fn runner(&self) -> Result<PolicyRunner> {
        self.validate()?;
        let mut rng = rng_from_seed(self.rng_seed);
        let v = uniform(&mut rng, self.v_range);
        let c = uniform(&mut rng, self.c_range);
        Ok(PolicyRunner {
            policy: self.clone(),
            rng,
            v,
            c,
            until_change: self.dwell,
        })
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Gaussian step folded back into `[lo, hi]`.
fn reflect_walk(rng: &mut ChaCha8Rng, x: f64, step: f64, [lo, hi]: [f64; 2]) -> f64 {
    if hi <= lo {
        return lo;
    }
    let z: f64 = rng.sample(StandardNormal);
    let mut y = x + step * z;
    let width = hi - lo;
    // fold into [lo, lo + 2 width) then mirror the upper half
    y = (y - lo).rem_euclid(2.0 * width);
    if y > width {
        y = 2.0 * width - y;
    }
    (lo + y).clamp(lo, hi)
}

/// Running state of an [`ExplorationPolicy`].
#[derive(Debug, Clone)]
pub struct PolicyRunner {
    policy: ExplorationPolicy,
    rng: ChaCha8Rng,
    v: f64,
    c: f64,
    until_change: f64,
}

impl PolicyRunner {
    /// Command for the next control period of length `dt`.
    pub fn next_command<T: Scalar>(&mut self, state: &VehicleState<T>, dt: f64) -> ControlInput<T> {
        let p = &self.policy;
        if self.until_change <= 1e-9 {
            if self.rng.random::<f64>() < p.jump_probability {
                self.v = uniform(&mut self.rng, p.v_range);
                self.c = uniform(&mut self.rng, p.c_range);
            } else {
                self.v = reflect_walk(&mut self.rng, self.v, p.v_step, p.v_range);
                self.c = reflect_walk(&mut self.rng, self.c, p.c_step, p.c_range);
            }
            self.until_change += p.dwell;
        }
        self.until_change -= dt;

        let mut c = self.c;
        if let Some(b) = &p.bounce {
            let pos = state.position.cast::<f64>();
            let to_center = Point2::new(b.center[0], b.center[1]) - pos;
            let heading = state.heading.f64();
            let forward = Point2::new(heading.cos(), heading.sin());
            let outside = to_center.norm() > b.radius;
            let facing_in = forward.dot(to_center) > 0.7 * to_center.norm();
            if outside && !facing_in {
                let side = if forward.cross(to_center) >= 0.0 { 1.0 } else { -1.0 };
                c = side * p.c_range[0].abs().max(p.c_range[1].abs());
                c = c.clamp(p.c_range[0], p.c_range[1]);
            }
        }
        ControlInput::new(T::of(self.v), T::of(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commands_stay_within_bounds() {
        let policy = ExplorationPolicy {
            v_step: 5.0,
            c_step: 5.0,
            bounce: Some(Bounce { center: [0.0, 0.0], radius: 1.0 }),
            ..Default::default()
        };
        let mut r = policy.runner().unwrap();
        let far = VehicleState::<f64>::at_pose(Point2::new(10.0, 0.0), 0.0);
        for i in 0..5000 {
            let s = if i % 2 == 0 { far } else { VehicleState::default() };
            let u = r.next_command(&s, 0.05);
            assert!((0.0..=3.0).contains(&u.velocity));
            assert!((-1.35..=1.35).contains(&u.curvature));
        }
    }

    #[test]
    fn dwell_holds_commands() {
        let mut r = ExplorationPolicy::default().runner().unwrap();
        let s = VehicleState::<f64>::default();
        let first: Vec<_> = (0..10).map(|_| r.next_command(&s, 0.05)).collect();
        assert!(first.iter().all(|u| *u == first[0]));
        assert_ne!(r.next_command(&s, 0.05), first[0]);
    }

    #[test]
    fn bounce_turns_toward_center() {
        let policy = ExplorationPolicy {
            c_range: [-1.35, 1.35],
            bounce: Some(Bounce { center: [0.0, 0.0], radius: 5.0 }),
            ..Default::default()
        };
        let mut r = policy.runner().unwrap();
        // at (10, 0) heading +y: centre is on the left
        let s = VehicleState::<f64>::at_pose(Point2::new(10.0, 0.0), std::f64::consts::FRAC_PI_2);
        assert_eq!(r.next_command(&s, 0.05).curvature, 1.35);
        let s = VehicleState::<f64>::at_pose(Point2::new(10.0, 0.0), -std::f64::consts::FRAC_PI_2);
        assert_eq!(r.next_command(&s, 0.05).curvature, -1.35);
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        assert!(ExplorationPolicy { v_range: [0.0, 4.0], ..Default::default() }.validate().is_err());
        assert!(ExplorationPolicy { c_range: [1.0, -1.0], ..Default::default() }.validate().is_err());
        assert!(ExplorationPolicy { dwell: 0.0, ..Default::default() }.validate().is_err());
    }

    proptest::proptest! {
        #[test]
        fn reflected_walk_is_bounded(x in 0.0f64..3.0, step in 0.0f64..50.0, seed in 0u64..1000) {
            let mut rng = rng_from_seed(seed);
            let y = reflect_walk(&mut rng, x, step, [0.0, 3.0]);
            proptest::prop_assert!((0.0..=3.0).contains(&y));
        }
    }
}
