use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VelocityScheduleConfig<T> {
    pub target_speed: T,
    pub max_accel: T,
    pub safety_distance_margin: T,
}

impl<T: Scalar> VelocityScheduleConfig<T> {
    pub fn new(target_speed: T) -> Self {
        VelocityScheduleConfig {
            target_speed,
            max_accel: T::of(4.0),
            safety_distance_margin: T::of(0.3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_speed > T::zero() && self.target_speed <= T::of(3.0)) {
            return Err(Error::Config(format!("target_speed {} outside (0, 3]", self.target_speed)));
        }
        if !(self.max_accel > T::zero()) {
            return Err(Error::Config("max_accel must be > 0".into()));
        }
        if !(self.safety_distance_margin >= T::zero()) {
            return Err(Error::Config("safety_distance_margin must be >= 0".into()));
        }
        Ok(())
    }
}

/// Fastest speed allowed by the target, the acceleration limit over one control
/// period, and stopping before `distance_ahead - margin`.
pub fn schedule_velocity<T: Scalar>(
    cfg: &VelocityScheduleConfig<T>,
    current_speed: T,
    distance_ahead: T,
    control_dt: T,
) -> T {
    let accel_limited = current_speed + cfg.max_accel * control_dt;
    let room = (distance_ahead - cfg.safety_distance_margin).max(T::zero());
    let stopping = (T::of(2.0) * cfg.max_accel * room).sqrt();
    cfg.target_speed.min(accel_limited).min(stopping).max(T::zero())
}
