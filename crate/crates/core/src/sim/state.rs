use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::scalar::Scalar;

/// Speed limits of the actuator, m/s.
pub const MIN_SPEED: f64 = 0.0;
pub const MAX_SPEED: f64 = 3.0;
/// Symmetric steering-curvature limit, 1/m.
pub const MAX_CURVATURE: f64 = 1.35;

/// Pose and velocities of the simulated Ackermann vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VehicleState<T> {
    pub position: Point2<T>,
    /// Wrapped to (-pi, pi].
    pub heading: T,
    /// Realized (post-slip) forward speed, never negative.
    pub linear_speed: T,
    pub yaw_rate: T,
    /// Lagged actuator states.
    pub actuator_speed: T,
    pub actuator_curvature: T,
    pub time: T,
}

impl<T: Scalar> VehicleState<T> {
    pub fn at_pose(position: Point2<T>, heading: T) -> Self {
        VehicleState {
            position,
            heading: crate::scalar::wrap_angle(heading),
            ..Default::default()
        }
    }

    /// Vehicle already cruising at `speed` along `curvature` on ideal ground.
    pub fn cruising(position: Point2<T>, heading: T, speed: T, curvature: T) -> Self {
        VehicleState {
            position,
            heading: crate::scalar::wrap_angle(heading),
            linear_speed: speed,
            yaw_rate: speed * curvature,
            actuator_speed: speed,
            actuator_curvature: curvature,
            time: T::zero(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && [
                self.heading,
                self.linear_speed,
                self.yaw_rate,
                self.actuator_speed,
                self.actuator_curvature,
                self.time,
            ]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Commanded linear velocity and steering curvature.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ControlInput<T> {
    pub velocity: T,
    pub curvature: T,
}

impl<T: Scalar> ControlInput<T> {
    /// Build a command clamped to the actuator limits. NaN components become zero.
    pub fn new(velocity: T, curvature: T) -> Self {
        ControlInput {
            velocity: clamp_or_zero(velocity, T::of(MIN_SPEED), T::of(MAX_SPEED)),
            curvature: clamp_or_zero(curvature, T::of(-MAX_CURVATURE), T::of(MAX_CURVATURE)),
        }
    }

    pub fn clamped(self) -> Self {
        Self::new(self.velocity, self.curvature)
    }

    pub fn within_limits(&self) -> bool {
        self.velocity >= T::of(MIN_SPEED)
            && self.velocity <= T::of(MAX_SPEED)
            && self.curvature.abs() <= T::of(MAX_CURVATURE)
    }

    pub fn is_finite(&self) -> bool {
        self.velocity.is_finite() && self.curvature.is_finite()
    }
}

fn clamp_or_zero<T: Scalar>(v: T, lo: T, hi: T) -> T {
    if v.is_nan() {
        T::zero()
    } else {
        v.max(lo).min(hi)
    }
}

/// Planar rigid-body displacement expressed in the robot frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Displacement<T> {
    pub dx: T,
    pub dy: T,
    pub dheading: T,
}

/// One 6-DoF inertial reading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ImuSample<T> {
    pub accel_x: T,
    pub accel_y: T,
    pub accel_z: T,
    pub gyro_x: T,
    pub gyro_y: T,
    pub gyro_z: T,
    pub time: T,
}

impl<T: Scalar> ImuSample<T> {
    /// Channels in the fixed order accel xyz, gyro xyz.
    pub fn channels(&self) -> [T; 6] {
        [
            self.accel_x,
            self.accel_y,
            self.accel_z,
            self.gyro_x,
            self.gyro_y,
            self.gyro_z,
        ]
    }
}
