use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rates, actuator dynamics and terrain-interaction gains of the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(default)]
pub struct SimConfig<T> {
    pub physics_dt: T,
    pub imu_dt: T,
    pub control_dt: T,
    /// m/s^2, bounds the actuator speed slew.
    pub max_accel: T,
    pub speed_lag_tau: T,
    pub steer_lag_tau: T,
    pub understeer_gain: T,
    pub vibration_gain: T,
    /// Intensity of the white curvature disturbance, scaled by roughness and speed.
    pub slip_noise: T,
    pub rng_seed: u64,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        SimConfig {
            physics_dt: T::of(0.001),
            imu_dt: T::of(0.005),
            control_dt: T::of(0.05),
            max_accel: T::of(4.0),
            speed_lag_tau: T::of(0.15),
            steer_lag_tau: T::of(0.08),
            understeer_gain: T::of(0.6),
            vibration_gain: T::of(1.0),
            slip_noise: T::of(0.02),
            rng_seed: 0,
        }
    }
}

impl<T: Scalar> SimConfig<T> {
    /// Ideal actuators: no lag, no slew limit, no disturbance.
    pub fn zero_lag() -> Self {
        SimConfig {
            speed_lag_tau: T::zero(),
            steer_lag_tau: T::zero(),
            max_accel: T::infinity(),
            slip_noise: T::zero(),
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    /// Physics steps per IMU sample.
    pub fn steps_per_imu(&self) -> usize {
        ratio(self.imu_dt, self.physics_dt)
    }

    /// Physics steps per control period.
    pub fn steps_per_control(&self) -> usize {
        ratio(self.control_dt, self.physics_dt)
    }

    pub fn imu_per_control(&self) -> usize {
        ratio(self.control_dt, self.imu_dt)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.physics_dt, self.imu_dt, self.control_dt];
        if positive.iter().any(|v| !(*v > T::zero() && v.is_finite())) {
            return Err(Error::Config("time steps must be positive and finite".into()));
        }
        if !(self.physics_dt <= self.imu_dt && self.imu_dt <= self.control_dt) {
            return Err(Error::Config("need physics_dt <= imu_dt <= control_dt".into()));
        }
        if !is_multiple(self.imu_dt, self.physics_dt) || !is_multiple(self.control_dt, self.imu_dt) {
            return Err(Error::Config(
                "imu_dt must be an integer multiple of physics_dt, control_dt of imu_dt".into(),
            ));
        }
        let non_negative = [
            self.speed_lag_tau,
            self.steer_lag_tau,
            self.understeer_gain,
            self.vibration_gain,
            self.slip_noise,
        ];
        if non_negative.iter().any(|v| !(*v >= T::zero())) {
            return Err(Error::Config("lag constants and gains must be >= 0".into()));
        }
        if !(self.max_accel > T::zero()) {
            return Err(Error::Config("max_accel must be > 0".into()));
        }
        Ok(())
    }
}

fn ratio<T: Scalar>(big: T, small: T) -> usize {
    (big / small).round().to_usize().unwrap_or(1).max(1)
}

fn is_multiple<T: Scalar>(big: T, small: T) -> bool {
    let r = big / small;
    (r - r.round()).abs() < T::of(1e-6) * r.max(T::one())
}
