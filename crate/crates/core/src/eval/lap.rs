use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::control::{BaselineConfig, ControlConfig, Controller, ControllerMode, VelocityScheduleConfig};
use crate::error::{Error, Result};
use crate::nn::ParameterSet;
use crate::plan::{GlobalPlan, Track, LOOKAHEAD};
use crate::scalar::Scalar;
use crate::sim::{ControlInput, SimConfig, Simulator, TerrainField, TrajectoryPoint, VehicleState};

/// Knobs of a lap run. Defaults describe a 1/10-scale car.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Scalar")]
pub struct EvalConfig<T> {
    pub sim: SimConfig<T>,
    pub baseline: BaselineConfig<T>,
    pub max_accel: T,
    pub safety_distance_margin: T,
    pub lookahead: T,
    /// Radius of the collision circle around the vehicle position, m.
    pub footprint_radius: T,
    /// A failure is declared when progress over `stuck_window` seconds stays below this, m.
    pub stuck_distance: T,
    pub stuck_window: T,
    /// Arclength past a failed turn's exit gate where the vehicle is put back, m.
    pub reset_offset: T,
    /// Lap time limit as a multiple of the nominal lap time, plus `timeout_slack` seconds.
    pub timeout_factor: T,
    pub timeout_slack: T,
    /// Weight of the squared cross-track integral in the lap objective, s/m^2.
    pub gamma: T,
    pub record_trajectory: bool,
}

impl<T: Scalar> Default for EvalConfig<T> {
    fn default() -> Self {
        let v = VelocityScheduleConfig::<T>::new(T::one());
        EvalConfig {
            sim: SimConfig::default(),
            baseline: BaselineConfig::default(),
            max_accel: v.max_accel,
            safety_distance_margin: v.safety_distance_margin,
            lookahead: T::of(LOOKAHEAD),
            footprint_radius: T::of(0.15),
            stuck_distance: T::of(0.1),
            stuck_window: T::of(3.0),
            reset_offset: T::of(0.3),
            timeout_factor: T::of(4.0),
            timeout_slack: T::of(20.0),
            gamma: T::one(),
            record_trajectory: true,
        }
    }
}

impl<T: Scalar> EvalConfig<T> {
    pub fn control_config(&self, target_speed: T) -> ControlConfig<T> {
        ControlConfig {
            baseline: self.baseline,
            velocity: VelocityScheduleConfig {
                target_speed,
                max_accel: self.max_accel,
                safety_distance_margin: self.safety_distance_margin,
            },
            lookahead: self.lookahead,
            control_dt: self.sim.control_dt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.baseline.validate()?;
        let positive = [self.stuck_window, self.lookahead, self.timeout_factor, self.max_accel];
        if positive.iter().any(|v| !(*v > T::zero())) {
            return Err(Error::Config("stuck_window, lookahead, timeout_factor and max_accel must be > 0".into()));
        }
        let non_negative = [
            self.footprint_radius,
            self.stuck_distance,
            self.reset_offset,
            self.timeout_slack,
            self.gamma,
            self.safety_distance_margin,
        ];
        if non_negative.iter().any(|v| !(*v >= T::zero())) {
            return Err(Error::Config("eval distances, slack and gamma must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnOutcome {
    Passed,
    Collision,
    Stuck,
}

impl TurnOutcome {
    pub fn failed(self) -> bool {
        self != TurnOutcome::Passed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapResult {
    pub mode: ControllerMode,
    pub target_speed: f64,
    pub seed: u64,
    /// `None` when the lap timed out or faulted.
    pub lap_time: Option<f64>,
    /// One entry per turn gate, in track order.
    pub turn_outcomes: Vec<TurnOutcome>,
    /// Failures after the last gate of the lap, which no turn owns.
    pub unattributed_failures: usize,
    pub mean_cross_track: f64,
    pub max_cross_track: f64,
    pub objective_j: Option<f64>,
    /// Control steps where the learned model faulted and the baseline was used.
    pub controller_faults: usize,
    /// Simulation fault that aborted the lap; such laps are excluded from rates.
    pub fault: Option<String>,
    #[serde(skip)]
    pub trajectory: Vec<TrajectoryPoint<f64>>,
}

impl LapResult {
    pub fn failures(&self) -> usize {
        self.turn_outcomes.iter().filter(|o| o.failed()).count()
    }
}

/// Lap objective `T + gamma * sum(e^2 dt)` with `e` the distance to the
/// projected plan point, integrated with the left rectangle rule.
pub fn objective_j<T: Scalar>(trajectory: &[VehicleState<T>], plan: &GlobalPlan<T>, gamma: T) -> T {
    let (Some(first), Some(last)) = (trajectory.first(), trajectory.last()) else {
        return T::zero();
    };
    let total = plan.total_length();
    let mut s = None;
    let mut integral = T::zero();
    for pair in trajectory.windows(2) {
        let x = &pair[0];
        let sp = plan.project(x, s);
        s = Some(sp);
        let e = plan.point_at(sp * total).distance(x.position);
        integral += e * e * (pair[1].time - x.time);
    }
    (last.time - first.time) + gamma * integral
}

fn to_f64<T: Scalar>(x: &VehicleState<T>, u: ControlInput<T>) -> TrajectoryPoint<f64> {
    TrajectoryPoint {
        state: VehicleState {
            position: x.position.cast(),
            heading: x.heading.f64(),
            linear_speed: x.linear_speed.f64(),
            yaw_rate: x.yaw_rate.f64(),
            actuator_speed: x.actuator_speed.f64(),
            actuator_curvature: x.actuator_curvature.f64(),
            time: x.time.f64(),
        },
        command: ControlInput {
            velocity: u.velocity.f64(),
            curvature: u.curvature.f64(),
        },
    }
}

/// Where each gate sits in unwrapped lap arclength.
struct GateWindow {
    entry: f64,
    exit: f64,
}

fn gate_windows<T: Scalar>(track: &Track<T>) -> Vec<GateWindow> {
    let total = track.plan.total_length().f64();
    track
        .gate_spans()
        .iter()
        .map(|g| {
            let (entry, exit) = (g.entry.f64(), g.exit.f64());
            GateWindow {
                entry,
                exit: if exit < entry { exit + total } else { exit },
            }
        })
        .collect()
}

/// Gate that owns a failure at unwrapped arclength `p`: the unresolved gate
/// containing `p`, else the next unresolved one ahead.
fn owning_gate(gates: &[GateWindow], outcomes: &[Option<TurnOutcome>], p: f64) -> Option<usize> {
    let open = |i: &usize| outcomes[*i].is_none();
    (0..gates.len())
        .filter(open)
        .find(|&i| gates[i].entry <= p && p < gates[i].exit)
        .or_else(|| {
            (0..gates.len())
                .filter(open)
                .filter(|&i| gates[i].entry > p)
                .min_by(|&a, &b| gates[a].entry.total_cmp(&gates[b].entry))
        })
}

/// Drive one lap from the plan origin. Turn failures (collision with a
/// boundary or no progress) are charged to their turn and the vehicle is put
/// back on the plan just past that turn's exit gate.
pub fn run_lap<T: Scalar>(
    track: &Track<T>,
    field: &TerrainField<T>,
    mode: ControllerMode,
    params: Option<&ParameterSet<T>>,
    target_speed: f64,
    seed: u64,
    cfg: &EvalConfig<T>,
) -> Result<LapResult> {
    cfg.validate()?;
    let mut controller = Controller::new(mode, params, cfg.control_config(T::of(target_speed)))?;
    let plan = &track.plan;
    let total = plan.total_length().f64();
    let gates = gate_windows(track);
    let finish = gates.iter().map(|g| g.exit).fold(total, f64::max);
    let finish = if plan.is_closed() { finish } else { total - 1e-3 };
    let dt = cfg.sim.control_dt.f64();
    let time_limit = cfg.timeout_factor.f64() * finish / target_speed.max(0.1) + cfg.timeout_slack.f64();
    let steps_per_imu = cfg.sim.steps_per_imu();
    let steps_per_control = cfg.sim.steps_per_control();

    let (p0, h0) = plan.pose_at(T::zero());
    let start = VehicleState::at_pose(p0, h0);
    let sim_cfg = SimConfig { rng_seed: seed, ..cfg.sim };
    let mut sim = Simulator::new(field, sim_cfg, start)?;

    let mut result = LapResult {
        mode,
        target_speed,
        seed,
        lap_time: None,
        turn_outcomes: Vec::new(),
        unattributed_failures: 0,
        mean_cross_track: 0.0,
        max_cross_track: 0.0,
        objective_j: None,
        controller_faults: 0,
        fault: None,
        trajectory: Vec::new(),
    };
    let mut outcomes: Vec<Option<TurnOutcome>> = vec![None; gates.len()];
    let mut progress = 0.0_f64;
    let mut last_s: Option<f64> = None;
    let mut history: VecDeque<(f64, f64)> = VecDeque::new();
    let (mut err_sum, mut err_sq_dt, mut err_max, mut err_n) = (0.0, 0.0, 0.0_f64, 0usize);
    let t0 = sim.state().time.f64();

    let outcome = 'lap: loop {
        let x = *sim.state();
        let now = x.time.f64() - t0;
        if now > time_limit {
            break 'lap Err(now);
        }
        let window = if mode == ControllerMode::Learned { sim.window() } else { None };
        let decision = controller.step(&x, window.as_deref(), track);
        if decision.fault.is_some() {
            result.controller_faults += 1;
        }
        let s = decision.progress_s.f64();
        if let Some(prev) = last_s {
            let mut ds = s - prev;
            if plan.is_closed() {
                ds -= ds.round();
            }
            progress += ds.max(0.0) * total;
        }
        last_s = Some(s);

        let e = plan.point_at(T::of(s * total)).distance(x.position).f64();
        err_sum += e;
        err_sq_dt += e * e * dt;
        err_max = err_max.max(e);
        err_n += 1;
        if cfg.record_trajectory {
            result.trajectory.push(to_f64(&x, decision.u));
        }

        for (i, g) in gates.iter().enumerate() {
            if outcomes[i].is_none() && progress >= g.exit {
                outcomes[i] = Some(TurnOutcome::Passed);
            }
        }
        if progress >= finish && outcomes.iter().all(Option::is_some) {
            break 'lap Ok(now);
        }

        let mut failure = None;
        for k in 1..=steps_per_control {
            if let Err(e) = sim.physics_step(decision.u) {
                result.fault = Some(e.to_string());
                break 'lap Err(f64::NAN);
            }
            if k % steps_per_imu == 0 && track.boundary_distance(sim.state().position) < cfg.footprint_radius {
                failure = Some(TurnOutcome::Collision);
                break;
            }
        }
        if !sim.state().is_finite() {
            result.fault = Some("non-finite vehicle state".into());
            break 'lap Err(f64::NAN);
        }
        let t_now = sim.state().time.f64() - t0;
        history.push_back((t_now, progress));
        while history.len() > 1 && t_now - history[1].0 >= cfg.stuck_window.f64() {
            history.pop_front();
        }
        if failure.is_none() {
            if let Some(&(t_old, p_old)) = history.front() {
                if t_now - t_old >= cfg.stuck_window.f64() - 1e-9 && progress - p_old < cfg.stuck_distance.f64() {
                    failure = Some(TurnOutcome::Stuck);
                }
            }
        }

        if let Some(kind) = failure {
            let resume = match owning_gate(&gates, &outcomes, progress) {
                Some(i) => {
                    outcomes[i] = Some(kind);
                    log::debug!("{mode} at {target_speed} m/s: {kind:?} in turn {}", track.gate_spans()[i].label);
                    gates[i].exit + cfg.reset_offset.f64()
                }
                None => {
                    result.unattributed_failures += 1;
                    progress + cfg.reset_offset.f64().max(0.5)
                }
            };
            let (p, h) = plan.pose_at(T::of(resume));
            sim.reset_state(VehicleState::at_pose(p, h));
            let s_new = plan.progress_of(T::of(resume));
            controller.reset(Some(s_new), T::zero());
            last_s = Some(s_new.f64());
            progress = resume;
            history.clear();
        }
    };

    match outcome {
        Ok(lap_time) => {
            result.lap_time = Some(lap_time);
            result.objective_j = Some(lap_time + cfg.gamma.f64() * err_sq_dt);
        }
        Err(t) if t.is_nan() => {
            log::warn!("{mode} lap at {target_speed} m/s (seed {seed}) faulted: {}", result.fault.as_deref().unwrap_or(""));
        }
        Err(t) => log::warn!("{mode} lap at {target_speed} m/s (seed {seed}) timed out after {t:.1} s"),
    }
    result.turn_outcomes = outcomes.into_iter().map(|o| o.unwrap_or(TurnOutcome::Stuck)).collect();
    if err_n > 0 {
        result.mean_cross_track = err_sum / err_n as f64;
        result.max_cross_track = err_max;
    }
    Ok(result)
}
