use crate::error::{Error, Result};
use crate::files::sha256_hex;
use crate::geometry::Point2;
use crate::scalar::Scalar;
use crate::sim::{ControlInput, PeriodSummary, SimConfig, Simulator, TerrainField, VehicleState, WINDOW_SAMPLES};

use super::dataset::{Dataset, Provenance, TrainingSample};
use super::policy::ExplorationPolicy;

/// Labels below this realized speed are rejected: c_r = ω_r / v_r is singular at rest.
pub const V_MIN_LABEL: f64 = 0.2;

/// Turn one held command and its outcome into a sample, or `None` when the
/// realized speed is too low to define a curvature.
pub fn align<T: Scalar>(
    time: T,
    command: ControlInput<T>,
    outcome: &PeriodSummary<T>,
    window: &[T],
) -> Option<TrainingSample> {
    let v_r = outcome.odometry_speed;
    if !(v_r.f64() >= V_MIN_LABEL) {
        return None;
    }
    Some(TrainingSample {
        v_r: v_r.f64() as f32,
        c_r: (outcome.gyro_z / v_r).f64() as f32,
        v_cmd: command.velocity.f64() as f32,
        c_cmd: command.curvature.f64() as f32,
        window: window.iter().map(|v| v.f64() as f32).collect(),
        time: time.f64(),
    })
}

pub fn terrain_hash<T: Scalar>(field: &TerrainField<T>) -> String {
    sha256_hex(&serde_json::to_vec(field).expect("terrain serializes"))
}

/// Drive `policy` for `duration` seconds from `start` and label every control
/// step that has a full IMU window behind it.
pub fn collect<T: Scalar>(
    field: &TerrainField<T>,
    cfg: &SimConfig<T>,
    policy: &ExplorationPolicy,
    duration: f64,
    start: VehicleState<T>,
) -> Result<Dataset> {
    let control_dt = cfg.control_dt.f64();
    let steps = (duration / control_dt).round() as usize;
    let warmup = WINDOW_SAMPLES.div_ceil(cfg.imu_per_control());
    if !(duration.is_finite() && steps > warmup) {
        return Err(Error::Data(format!(
            "duration {duration} s is too short for one full IMU window ({} s)",
            warmup as f64 * control_dt
        )));
    }
    field.validate()?;
    let mut runner = policy.runner()?;
    let mut sim = Simulator::new(field, *cfg, start)?;
    let mut samples = Vec::new();
    for _ in 0..steps {
        let u = runner.next_command(sim.state(), control_dt);
        let time = sim.state().time;
        let window = sim.window();
        let outcome = sim.advance(u)?;
        if let Some(w) = window {
            if let Some(s) = align(time, u, &outcome, &w) {
                samples.push(s);
            }
        }
    }
    log::info!("collected {} samples over {duration} s", samples.len());
    Ok(Dataset {
        samples,
        provenance: Provenance {
            terrain_hash: terrain_hash(field),
            sim_seed: cfg.rng_seed,
            policy_seed: policy.rng_seed,
            duration,
            control_dt,
            label_horizon: control_dt,
            v_min_label: V_MIN_LABEL,
            window_span: WINDOW_SAMPLES as f64 * cfg.imu_dt.f64(),
            window_layout: "channel-major: accel_x, accel_y, accel_z, gyro_x, gyro_y, gyro_z; oldest first".into(),
            config_hash: None,
        },
    })
}

/// Start pose for arena collection: the bounce centre, or the origin.
pub fn arena_start<T: Scalar>(policy: &ExplorationPolicy) -> VehicleState<T> {
    let c = policy.bounce.map(|b| b.center).unwrap_or([0.0, 0.0]);
    VehicleState::at_pose(Point2::new(T::of(c[0]), T::of(c[1])), T::zero())
}
