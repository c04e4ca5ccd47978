//! Terrain-dependent vehicle simulator with a hidden world state.

mod config;
mod dynamics;
mod imu;
mod simulator;
mod state;
mod terrain;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::SimConfig;
pub use dynamics::{grip_factor, rollout_ideal, step, STRAIGHT_EPS};
pub use imu::{sample_imu, GRAVITY};
pub use simulator::{PeriodSummary, Simulator, IMU_CHANNELS, WINDOW_LEN, WINDOW_SAMPLES};
pub use state::{
    ControlInput, Displacement, ImuSample, VehicleState, MAX_CURVATURE, MAX_SPEED, MIN_SPEED,
};
pub use terrain::{TerrainField, TerrainParams, TerrainPatch};

use crate::scalar::Scalar;

/// The seeded stream used by every simulation instance.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One row of a trajectory dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint<T> {
    pub state: VehicleState<T>,
    pub command: ControlInput<T>,
}

pub const TRAJECTORY_HEADER: &str = "time,x,y,heading,speed,yaw_rate,cmd_v,cmd_c";

/// Write `time,x,y,heading,speed,yaw_rate,cmd_v,cmd_c` rows.
pub fn write_trajectory_csv<T: Scalar, W: Write>(out: &mut W, points: &[TrajectoryPoint<T>]) -> std::io::Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    for p in points {
        let s = &p.state;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.time, s.position.x, s.position.y, s.heading, s.linear_speed, s.yaw_rate, p.command.velocity, p.command.curvature
        )?;
    }
    Ok(())
}
