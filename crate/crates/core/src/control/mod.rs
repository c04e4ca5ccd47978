//! Closed-loop controllers: the ideal-model sampling baseline and the learned
//! inverse models that correct its command.

mod baseline;
mod learned;
mod velocity;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use baseline::{baseline_select, curvature_candidates, rollout_miss, BaselineConfig};
pub use learned::{ablated_select, learned_select};
pub use velocity::{schedule_velocity, VelocityScheduleConfig};

use crate::error::{Error, Result};
use crate::nn::ParameterSet;
use crate::plan::{Track, LOOKAHEAD};
use crate::scalar::Scalar;
use crate::sim::{ControlInput, Displacement, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerMode {
    Baseline,
    Ablated,
    Learned,
}

impl ControllerMode {
    pub const ALL: [ControllerMode; 3] = [ControllerMode::Baseline, ControllerMode::Ablated, ControllerMode::Learned];

    pub fn as_str(self) -> &'static str {
        match self {
            ControllerMode::Baseline => "baseline",
            ControllerMode::Ablated => "ablated",
            ControllerMode::Learned => "learned",
        }
    }
}

impl fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControllerMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(ControllerMode::Baseline),
            "ablated" => Ok(ControllerMode::Ablated),
            "learned" => Ok(ControllerMode::Learned),
            other => Err(Error::Config(format!(
                "unknown controller mode '{other}' (valid: baseline, ablated, learned)"
            ))),
        }
    }
}

/// Everything a controller needs besides its network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ControlConfig<T> {
    pub baseline: BaselineConfig<T>,
    pub velocity: VelocityScheduleConfig<T>,
    pub lookahead: T,
    pub control_dt: T,
}

impl<T: Scalar> ControlConfig<T> {
    pub fn new(target_speed: T) -> Self {
        ControlConfig {
            baseline: BaselineConfig::default(),
            velocity: VelocityScheduleConfig::new(target_speed),
            lookahead: T::of(LOOKAHEAD),
            control_dt: T::of(0.05),
        }
    }
}

/// One control decision together with the baseline command it refines.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlDecision<T> {
    pub u: ControlInput<T>,
    pub u_baseline: ControlInput<T>,
    pub delta_x: Displacement<T>,
    pub progress_s: T,
    /// Set when a learned model faulted and the baseline command was used.
    pub fault: Option<String>,
}

/// Stateful closed-loop controller: remembers the projection and the last
/// scheduled speed between calls.
#[derive(Debug, Clone)]
pub struct Controller<'p, T> {
    mode: ControllerMode,
    params: Option<&'p ParameterSet<T>>,
    cfg: ControlConfig<T>,
    previous_s: Option<T>,
    last_speed: T,
}

impl<'p, T: Scalar> Controller<'p, T> {
    pub fn new(mode: ControllerMode, params: Option<&'p ParameterSet<T>>, cfg: ControlConfig<T>) -> Result<Self> {
        cfg.baseline.validate()?;
        cfg.velocity.validate()?;
        match (mode, params) {
            (ControllerMode::Baseline, _) => {}
            (_, None) => return Err(Error::Config(format!("{mode} controller needs trained parameters"))),
            (ControllerMode::Learned, Some(p)) if !p.use_encoder() => {
                return Err(Error::Config("learned controller needs a network with an encoder".into()))
            }
            (ControllerMode::Ablated, Some(p)) if p.use_encoder() => {
                return Err(Error::Config("ablated controller needs a network without an encoder".into()))
            }
            _ => {}
        }
        Ok(Controller {
            mode,
            params,
            cfg,
            previous_s: None,
            last_speed: T::zero(),
        })
    }

    pub fn mode(&self) -> ControllerMode {
        self.mode
    }

    pub fn config(&self) -> &ControlConfig<T> {
        &self.cfg
    }

    /// Forget projection history and speed, e.g. after the vehicle is relocated.
    pub fn reset(&mut self, progress_s: Option<T>, speed: T) {
        self.previous_s = progress_s;
        self.last_speed = speed;
    }

    /// project -> carrot -> schedule speed -> baseline -> optional learned correction.
    pub fn step(&mut self, x: &VehicleState<T>, window: Option<&[T]>, track: &Track<T>) -> ControlDecision<T> {
        let plan = &track.plan;
        let s = plan.project(x, self.previous_s);
        self.previous_s = Some(s);
        let carrot = plan.carrot(s, x, self.cfg.lookahead);
        let ahead = track.distance_ahead(x.position, x.heading);
        let v = schedule_velocity(&self.cfg.velocity, self.last_speed, ahead, self.cfg.control_dt);
        self.last_speed = v;

        let mut bcfg = self.cfg.baseline;
        if bcfg.adaptive_horizon && v > T::zero() {
            bcfg.horizon = (self.cfg.lookahead / v).max(self.cfg.control_dt);
        } else if bcfg.adaptive_horizon {
            bcfg.horizon = self.cfg.lookahead;
        }
        let u_baseline = baseline_select(x, &carrot, &bcfg, v);

        let corrected = match (self.mode, self.params) {
            (ControllerMode::Baseline, _) | (_, None) => Ok(u_baseline),
            (ControllerMode::Ablated, Some(p)) => ablated_select(u_baseline, p),
            (ControllerMode::Learned, Some(p)) => match window {
                Some(w) => learned_select(u_baseline, w, p),
                None => Ok(u_baseline),
            },
        };
        let (u, fault) = match corrected {
            Ok(u) => (u, None),
            Err(e) => {
                log::warn!("{} controller fault at t = {}: {e}; using baseline command", self.mode, x.time);
                (u_baseline, Some(e.to_string()))
            }
        };
        ControlDecision {
            u,
            u_baseline,
            delta_x: carrot.delta_x,
            progress_s: s,
            fault,
        }
    }
}

pub const DECISION_HEADER: &str = "time,mode,v_in,c_in,v_out,c_out";

/// Per-step decision log: `time,mode,v_in,c_in,v_out,c_out`.
pub fn write_decision_csv<T: Scalar, W: Write>(
    out: &mut W,
    mode: ControllerMode,
    rows: &[(T, ControlDecision<T>)],
) -> std::io::Result<()> {
    writeln!(out, "{DECISION_HEADER}")?;
    for (t, d) in rows {
        writeln!(
            out,
            "{t},{mode},{},{},{},{}",
            d.u_baseline.velocity, d.u_baseline.curvature, d.u.velocity, d.u.curvature
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::nn::NetworkSpec;
    use crate::plan::GlobalPlan;

    fn track() -> Track<f64> {
        let plan = GlobalPlan::new(vec![Point2::new(0.0, 0.0), Point2::new(20.0, 0.0), Point2::new(20.0, 20.0)], false).unwrap();
        Track::new(plan, vec![], vec![]).unwrap()
    }

    #[test]
    fn mode_parsing_lists_valid_modes() {
        assert_eq!("ablated".parse::<ControllerMode>().unwrap(), ControllerMode::Ablated);
        let err = "fast".parse::<ControllerMode>().unwrap_err().to_string();
        assert!(err.contains("baseline, ablated, learned"), "{err}");
    }

    #[test]
    fn baseline_mode_is_identity_composition() {
        let t = track();
        let mut c = Controller::new(ControllerMode::Baseline, None, ControlConfig::new(2.0)).unwrap();
        let x = VehicleState::at_pose(Point2::new(1.0, 0.3), 0.1);
        let d = c.step(&x, None, &t);
        assert_eq!(d.u, d.u_baseline);
        assert!(d.fault.is_none());
        assert!(d.u.curvature < 0.0, "steers back toward the plan");
    }

    #[test]
    fn nan_parameters_fall_back_to_baseline() {
        let t = track();
        let mut p = ParameterSet::<f64>::init(NetworkSpec::full(), 1).unwrap();
        p.weights.encoder[0].bias[0] = f64::NAN;
        let mut c = Controller::new(ControllerMode::Learned, Some(&p), ControlConfig::new(2.0)).unwrap();
        let x = VehicleState::at_pose(Point2::new(1.0, 0.3), 0.0);
        let d = c.step(&x, Some(&[0.0; 600]), &t);
        assert_eq!(d.u, d.u_baseline);
        assert!(d.fault.is_some());
    }

    #[test]
    fn learned_mode_requires_parameters() {
        assert!(Controller::<f64>::new(ControllerMode::Learned, None, ControlConfig::new(2.0)).is_err());
        let abl = ParameterSet::<f64>::zeros(NetworkSpec::ablated()).unwrap();
        assert!(Controller::new(ControllerMode::Learned, Some(&abl), ControlConfig::new(2.0)).is_err());
    }

    #[test]
    fn speed_ramps_within_accel_limit() {
        let t = track();
        let mut c = Controller::new(ControllerMode::Baseline, None, ControlConfig::new(2.0)).unwrap();
        let x = VehicleState::at_pose(Point2::new(1.0, 0.0), 0.0);
        let v1 = c.step(&x, None, &t).u.velocity;
        let v2 = c.step(&x, None, &t).u.velocity;
        assert!((v1 - 0.2).abs() < 1e-12 && (v2 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn decision_log_format() {
        let d = ControlDecision {
            u: ControlInput::new(1.0, 0.5),
            u_baseline: ControlInput::new(1.0, 0.25),
            delta_x: Displacement::default(),
            progress_s: 0.0,
            fault: None,
        };
        let mut buf = Vec::new();
        write_decision_csv(&mut buf, ControllerMode::Learned, &[(0.05, d)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time,mode,v_in,c_in,v_out,c_out\n0.05,learned,1,0.25,1,0.5\n");
    }
}
