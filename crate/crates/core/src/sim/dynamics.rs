//! Ground-truth forward dynamics and the ideal constant-curvature model.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::SimConfig;
use super::state::{ControlInput, Displacement, VehicleState, MAX_CURVATURE};
use super::terrain::{TerrainField, TerrainParams};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scalar::{wrap_angle, Scalar};

/// Below this curvature magnitude arcs are treated as straight lines.
pub const STRAIGHT_EPS: f64 = 1e-6;

/// Fraction of actuator curvature realized on `terrain` at `speed`.
///
/// `grip / (1 + understeer_gain * roughness * speed^2)`: equal to `grip` at rest and
/// non-increasing in both speed and roughness.
pub fn grip_factor<T: Scalar>(terrain: &TerrainParams<T>, speed: T, understeer_gain: T) -> T {
    terrain.grip / (T::one() + understeer_gain * terrain.roughness * speed * speed)
}

/// One physics step of `cfg.physics_dt`.
pub fn step<T: Scalar, R: Rng + ?Sized>(
    state: &VehicleState<T>,
    u: ControlInput<T>,
    field: &TerrainField<T>,
    cfg: &SimConfig<T>,
    rng: &mut R,
) -> Result<VehicleState<T>> {
    if !state.is_finite() || !u.is_finite() {
        return Err(Error::SimulationFault(format!(
            "non-finite state or input at t = {}",
            state.time
        )));
    }
    let u = u.clamped();
    let dt = cfg.physics_dt;

    let speed_gain = lag_gain(dt, cfg.speed_lag_tau);
    let slew = cfg.max_accel * dt;
    let dv = ((u.velocity - state.actuator_speed) * speed_gain).max(-slew).min(slew);
    let actuator_speed = (state.actuator_speed + dv).max(T::zero());

    let steer_gain = lag_gain(dt, cfg.steer_lag_tau);
    let c_max = T::of(MAX_CURVATURE);
    let actuator_curvature = (state.actuator_curvature
        + (u.curvature - state.actuator_curvature) * steer_gain)
        .max(-c_max)
        .min(c_max);

    let terrain = field.terrain_at(state.position);
    let speed = (actuator_speed * (T::one() - terrain.drag * dt)).max(T::zero());
    let mut curvature = actuator_curvature * grip_factor(&terrain, speed, cfg.understeer_gain);

    let sigma = cfg.slip_noise * terrain.roughness * speed / dt.sqrt();
    if sigma > T::zero() {
        let n: f64 = rng.sample(StandardNormal);
        curvature = curvature + sigma * T::of(n);
    }

    let (position, heading) = advance_arc(state.position, state.heading, speed, curvature, dt);
    let next = VehicleState {
        position,
        heading,
        linear_speed: speed,
        yaw_rate: speed * curvature,
        actuator_speed,
        actuator_curvature,
        time: state.time + dt,
    };
    if !next.is_finite() {
        return Err(Error::SimulationFault(format!("state diverged at t = {}", next.time)));
    }
    Ok(next)
}

/// Exact discrete gain of a first-order lag; a zero time constant tracks instantly.
fn lag_gain<T: Scalar>(dt: T, tau: T) -> T {
    if tau <= T::zero() {
        T::one()
    } else {
        T::one() - (-dt / tau).exp()
    }
}

/// Move along a constant-curvature arc using the exact chord.
fn advance_arc<T: Scalar>(position: Point2<T>, heading: T, speed: T, curvature: T, dt: T) -> (Point2<T>, T) {
    let dtheta = speed * curvature * dt;
    let chord = if curvature.abs() < T::of(STRAIGHT_EPS) {
        speed * dt
    } else {
        T::of(2.0) * (dtheta / T::of(2.0)).sin() / curvature
    };
    let mid = heading + dtheta / T::of(2.0);
    let position = Point2::new(position.x + chord * mid.cos(), position.y + chord * mid.sin());
    (position, wrap_angle(heading + dtheta))
}

/// Ideal (no slip, no lag) displacement in the robot frame after `horizon` seconds
/// of constant command `u`.
pub fn rollout_ideal<T: Scalar>(u: ControlInput<T>, horizon: T) -> Displacement<T> {
    let v = u.velocity;
    let c = u.curvature;
    if c.abs() < T::of(STRAIGHT_EPS) {
        return Displacement {
            dx: v * horizon,
            dy: T::zero(),
            dheading: T::zero(),
        };
    }
    let theta = v * c * horizon;
    Displacement {
        dx: theta.sin() / c,
        dy: (T::one() - theta.cos()) / c,
        dheading: theta,
    }
}
