//! Inertial observation model.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::SimConfig;
use super::state::{ImuSample, VehicleState};
use super::terrain::TerrainField;
use crate::scalar::Scalar;

pub const GRAVITY: f64 = 9.81;

/// Relative vibration amplitude leaking into the non-vertical channels.
const LATERAL_COUPLING: f64 = 0.3;
const GYRO_COUPLING: f64 = 0.1;
const YAW_COUPLING: f64 = 0.05;

/// Synthesize one IMU reading for `state` on `field`.
///
/// Vibration noise on the vertical axis has standard deviation
/// `vibration_gain * roughness * speed`; the other axes see a smaller coupled share.
pub fn sample_imu<T: Scalar, R: Rng + ?Sized>(
    state: &VehicleState<T>,
    field: &TerrainField<T>,
    cfg: &SimConfig<T>,
    rng: &mut R,
) -> ImuSample<T> {
    let terrain = field.terrain_at(state.position);
    let speed = state.linear_speed;
    let sigma = cfg.vibration_gain * terrain.roughness * speed;
    let mut noise = |scale: f64| -> T {
        if sigma > T::zero() {
            let n: f64 = rng.sample(StandardNormal);
            sigma * T::of(scale * n)
        } else {
            T::zero()
        }
    };
    // a_y = v^2 c_eff = v * yaw_rate
    let centripetal = speed * state.yaw_rate;
    ImuSample {
        accel_x: noise(LATERAL_COUPLING),
        accel_y: centripetal + noise(LATERAL_COUPLING),
        accel_z: T::of(GRAVITY) + noise(1.0),
        gyro_x: noise(GYRO_COUPLING),
        gyro_y: noise(GYRO_COUPLING),
        gyro_z: state.yaw_rate + noise(YAW_COUPLING),
        time: state.time,
    }
}
