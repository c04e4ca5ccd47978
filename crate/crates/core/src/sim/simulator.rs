//! Stateful wrapper that runs physics, IMU and control at their nested rates.

use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;

use super::config::SimConfig;
use super::dynamics::step;
use super::imu::sample_imu;
use super::state::{ControlInput, ImuSample, VehicleState};
use super::terrain::TerrainField;
use super::rng_from_seed;
use crate::error::Result;
use crate::scalar::Scalar;

/// IMU samples per observation window (0.5 s at 200 Hz).
pub const WINDOW_SAMPLES: usize = 100;
pub const IMU_CHANNELS: usize = 6;
/// Flattened observation length.
pub const WINDOW_LEN: usize = WINDOW_SAMPLES * IMU_CHANNELS;

/// What happened during one control period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodSummary<T> {
    /// Mean wheel-odometry (actuator) speed over the period.
    pub odometry_speed: T,
    /// Mean gyro-z over the IMU samples taken during the period.
    pub gyro_z: T,
}

/// One simulation instance: owns its state, seeded stream and IMU history.
#[derive(Debug, Clone)]
pub struct Simulator<'a, T> {
    field: &'a TerrainField<T>,
    cfg: SimConfig<T>,
    rng: ChaCha8Rng,
    state: VehicleState<T>,
    history: VecDeque<ImuSample<T>>,
    steps: u64,
    steps_per_imu: u64,
    // heading change and elapsed time since the last IMU sample
    yaw_accum: T,
    accum_time: T,
}

impl<'a, T: Scalar> Simulator<'a, T> {
    pub fn new(field: &'a TerrainField<T>, cfg: SimConfig<T>, initial: VehicleState<T>) -> Result<Self> {
        cfg.validate()?;
        Ok(Simulator {
            field,
            rng: rng_from_seed(cfg.rng_seed),
            steps_per_imu: cfg.steps_per_imu() as u64,
            cfg,
            state: initial,
            history: VecDeque::with_capacity(WINDOW_SAMPLES + 1),
            steps: 0,
            yaw_accum: T::zero(),
            accum_time: T::zero(),
        })
    }

    pub fn state(&self) -> &VehicleState<T> {
        &self.state
    }

    pub fn config(&self) -> &SimConfig<T> {
        &self.cfg
    }

    pub fn field(&self) -> &TerrainField<T> {
        self.field
    }

    /// Teleport the vehicle, keeping the clock running and discarding nothing else.
    pub fn reset_state(&mut self, state: VehicleState<T>) {
        let time = self.state.time;
        self.state = VehicleState { time, ..state };
        self.yaw_accum = T::zero();
        self.accum_time = T::zero();
    }

    pub fn imu_history(&self) -> impl Iterator<Item = &ImuSample<T>> {
        self.history.iter()
    }

    /// The last 100 IMU samples, channel-major (100 accel_x, 100 accel_y, ...,
    /// 100 gyro_z), oldest first within each block. `None` during warm-up.
    pub fn window(&self) -> Option<Vec<T>> {
        if self.history.len() < WINDOW_SAMPLES {
            return None;
        }
        let mut out = vec![T::zero(); WINDOW_LEN];
        let start = self.history.len() - WINDOW_SAMPLES;
        for (i, sample) in self.history.iter().skip(start).enumerate() {
            for (ch, v) in sample.channels().into_iter().enumerate() {
                out[ch * WINDOW_SAMPLES + i] = v;
            }
        }
        Some(out)
    }

    /// One physics step. When the clock lands on the IMU grid a sample is
    /// recorded, integrating the yaw rate over the elapsed IMU interval.
    pub fn physics_step(&mut self, u: ControlInput<T>) -> Result<Option<ImuSample<T>>> {
        let before = self.state.heading;
        self.state = step(&self.state, u, self.field, &self.cfg, &mut self.rng)?;
        self.yaw_accum = self.yaw_accum + crate::scalar::wrap_angle(self.state.heading - before);
        self.accum_time = self.accum_time + self.cfg.physics_dt;
        self.steps += 1;
        if self.steps % self.steps_per_imu == 0 {
            return Ok(Some(self.record_imu()));
        }
        Ok(None)
    }

    /// Hold `u` for one control period.
    pub fn advance(&mut self, u: ControlInput<T>) -> Result<PeriodSummary<T>> {
        let n = self.cfg.steps_per_control();
        let mut odometry = T::zero();
        let mut gyro = T::zero();
        let mut readings = 0usize;
        for _ in 0..n {
            if let Some(sample) = self.physics_step(u)? {
                gyro = gyro + sample.gyro_z;
                readings += 1;
            }
            odometry = odometry + self.state.actuator_speed;
        }
        Ok(PeriodSummary {
            odometry_speed: odometry / T::of(n as f64),
            gyro_z: if readings > 0 { gyro / T::of(readings as f64) } else { self.state.yaw_rate },
        })
    }

    /// Sensor reading of the current state with yaw rate averaged over the
    /// elapsed IMU interval.
    fn measure_imu(&mut self) -> ImuSample<T> {
        let mut view = self.state;
        if self.accum_time > T::zero() {
            view.yaw_rate = self.yaw_accum / self.accum_time;
        }
        sample_imu(&view, self.field, &self.cfg, &mut self.rng)
    }

    fn record_imu(&mut self) -> ImuSample<T> {
        let sample = self.measure_imu();
        self.yaw_accum = T::zero();
        self.accum_time = T::zero();
        if self.history.len() == WINDOW_SAMPLES {
            self.history.pop_front();
        }
        self.history.push_back(sample);
        sample
    }
}
