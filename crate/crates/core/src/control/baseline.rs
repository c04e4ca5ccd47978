//! Sampling controller over the ideal constant-curvature model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::plan::CarrotTarget;
use crate::scalar::Scalar;
use crate::sim::{rollout_ideal, ControlInput, Displacement, VehicleState, MAX_CURVATURE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Scalar")]
pub struct BaselineConfig<T> {
    pub num_samples: usize,
    /// Rollout duration, seconds.
    pub horizon: T,
    /// Half-width of the sampled curvature range around the current curvature, 1/m.
    pub curvature_window: T,
    /// When set, the closed loop replaces `horizon` by lookahead / speed
    /// (floored at the control period) so rollouts span the lookahead distance.
    pub adaptive_horizon: bool,
}

impl<T: Scalar> Default for BaselineConfig<T> {
    fn default() -> Self {
        BaselineConfig {
            num_samples: 100,
            horizon: T::of(0.5),
            curvature_window: T::of(2.0 * MAX_CURVATURE),
            adaptive_horizon: true,
        }
    }
}

impl<T: Scalar> BaselineConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 2 {
            return Err(Error::Config("num_samples must be >= 2".into()));
        }
        if !(self.horizon > T::zero()) {
            return Err(Error::Config("horizon must be > 0".into()));
        }
        if !(self.curvature_window >= T::zero()) {
            return Err(Error::Config("curvature_window must be >= 0".into()));
        }
        Ok(())
    }
}

/// Evenly spaced curvature samples over `[center - window, center + window]`
/// intersected with the actuator range, plus the straight command whenever it
/// lies inside. The grid is built from integer offsets so that negating
/// `center` negates every sample exactly.
pub fn curvature_candidates<T: Scalar>(center: T, cfg: &BaselineConfig<T>) -> Vec<T> {
    let limit = T::of(MAX_CURVATURE);
    let center = center.max(-limit).min(limit);
    let lo = (center - cfg.curvature_window).max(-limit);
    let hi = (center + cfg.curvature_window).min(limit);
    let mid = (lo + hi) / T::of(2.0);
    let half = (hi - lo) / T::of(2.0);
    let n = cfg.num_samples.max(2);
    let denom = T::of((n - 1) as f64);
    let mut out: Vec<T> = (0..n)
        .map(|i| {
            let offset = T::of(2.0 * i as f64 - (n - 1) as f64) / denom;
            mid + half * offset
        })
        .collect();
    if lo <= T::zero() && hi >= T::zero() && !out.iter().any(|c| *c == T::zero()) {
        out.push(T::zero());
    }
    out
}

/// Distance from the ideal rollout endpoint to the target, both in the robot frame.
pub fn rollout_miss<T: Scalar>(target: &Displacement<T>, velocity: T, curvature: T, horizon: T) -> T {
    let end = rollout_ideal(ControlInput { velocity, curvature }, horizon);
    Point2::new(end.dx - target.dx, end.dy - target.dy).norm()
}

/// Pick the sampled curvature whose ideal rollout ends closest to the carrot;
/// ties go to the smaller |c|.
pub fn baseline_select<T: Scalar>(
    x: &VehicleState<T>,
    carrot: &CarrotTarget<T>,
    cfg: &BaselineConfig<T>,
    v_sched: T,
) -> ControlInput<T> {
    let (rollout_speed, horizon) = rollout_speed(v_sched, cfg.horizon);
    let best = select_curvature(&carrot.delta_x, x.actuator_curvature, cfg, rollout_speed, horizon);
    ControlInput::new(v_sched, best)
}

/// A stopped scheduler still needs a steering choice: roll out the same arc
/// length at unit speed.
fn rollout_speed<T: Scalar>(v_sched: T, horizon: T) -> (T, T) {
    if v_sched > T::zero() {
        (v_sched, horizon)
    } else {
        (T::one(), horizon)
    }
}

pub(crate) fn select_curvature<T: Scalar>(target: &Displacement<T>, center: T, cfg: &BaselineConfig<T>, velocity: T, horizon: T) -> T {
    let mut best = (T::infinity(), T::zero());
    for c in curvature_candidates(center, cfg) {
        let miss = rollout_miss(target, velocity, c, horizon);
        let better = miss < best.0 || (miss == best.0 && c.abs() < best.1.abs());
        if better {
            best = (miss, c);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn carrot(dx: f64, dy: f64) -> CarrotTarget<f64> {
        CarrotTarget {
            target_point: Point2::new(dx, dy),
            delta_x: Displacement { dx, dy, dheading: 0.0 },
            progress_s: 0.0,
        }
    }

    #[test]
    fn straight_carrot_selects_zero_curvature() {
        let u = baseline_select(&VehicleState::default(), &carrot(1.0, 0.0), &BaselineConfig::default(), 2.0);
        assert_eq!(u.curvature, 0.0);
        assert_eq!(u.velocity, 2.0);
    }

    #[test]
    fn dense_sampling_converges_to_circle_through_target() {
        let cfg = BaselineConfig {
            num_samples: 20_001,
            horizon: FRAC_PI_2,
            ..Default::default()
        };
        let left = baseline_select(&VehicleState::default(), &carrot(1.0, 1.0), &cfg, 1.0);
        let right = baseline_select(&VehicleState::default(), &carrot(1.0, -1.0), &cfg, 1.0);
        let expected = 2.0 * 1.0 / (1.0 + 1.0);
        assert!((left.curvature - expected).abs() < 1e-3, "{}", left.curvature);
        assert!((right.curvature + expected).abs() < 1e-3, "{}", right.curvature);
    }

    #[test]
    fn candidates_respect_window_and_limits() {
        let cfg = BaselineConfig { curvature_window: 0.5, ..Default::default() };
        let c = curvature_candidates(1.2, &cfg);
        assert_eq!(c.len(), 100, "window [0.7, 1.35] excludes straight");
        assert!(c.iter().all(|&v| (0.7 - 1e-12..=1.35).contains(&v)));
        let c = curvature_candidates(0.1, &cfg);
        assert_eq!(c.len(), 101);
        assert!(c.contains(&0.0));
    }

    #[test]
    fn candidate_grid_is_mirror_exact() {
        let cfg = BaselineConfig::<f64> { curvature_window: 0.9, ..Default::default() };
        for center in [0.0, 0.3, -0.77, 1.35, 0.123456789] {
            let mut a = curvature_candidates(center, &cfg);
            let mut b: Vec<f64> = curvature_candidates(-center, &cfg).into_iter().map(|c| -c).collect();
            a.sort_by(|x, y| x.partial_cmp(y).unwrap());
            b.sort_by(|x, y| x.partial_cmp(y).unwrap());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn stopped_scheduler_still_steers() {
        let u = baseline_select(&VehicleState::default(), &carrot(0.7, 0.7), &BaselineConfig::default(), 0.0);
        assert_eq!(u.velocity, 0.0);
        assert!(u.curvature > 0.5);
    }

    proptest::proptest! {
        #[test]
        fn selection_is_the_exhaustive_argmin(dx in -2.0f64..2.0, dy in -2.0f64..2.0, c0 in -1.35f64..1.35, v in 0.1f64..3.0) {
            let cfg = BaselineConfig::default();
            let x = VehicleState { actuator_curvature: c0, ..Default::default() };
            let u = baseline_select(&x, &carrot(dx, dy), &cfg, v);
            let target = Displacement { dx, dy, dheading: 0.0 };
            let chosen = rollout_miss(&target, v, u.curvature, cfg.horizon);
            for c in curvature_candidates(c0, &cfg) {
                proptest::prop_assert!(chosen <= rollout_miss(&target, v, c, cfg.horizon));
            }
        }

        #[test]
        fn selection_is_mirror_equivariant(dx in -2.0f64..2.0, dy in -2.0f64..2.0, c0 in -1.35f64..1.35, v in 0.1f64..3.0) {
            let cfg = BaselineConfig::default();
            let x = VehicleState { actuator_curvature: c0, ..Default::default() };
            let xm = VehicleState { actuator_curvature: -c0, ..Default::default() };
            let a = baseline_select(&x, &carrot(dx, dy), &cfg, v);
            let b = baseline_select(&xm, &carrot(dx, -dy), &cfg, v);
            proptest::prop_assert!((a.curvature + b.curvature).abs() < 1e-9, "{} vs {}", a.curvature, b.curvature);
        }
    }
}
