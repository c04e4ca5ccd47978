use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lap::{run_lap, EvalConfig, LapResult, TurnOutcome};
use crate::control::ControllerMode;
use crate::error::{Error, Result};
use crate::nn::ParameterSet;
use crate::plan::Track;
use crate::scalar::Scalar;
use crate::sim::{write_trajectory_csv, TerrainField};

/// Trained networks available to a benchmark.
#[derive(Debug, Clone, Copy)]
pub struct Models<'a, T> {
    pub learned: Option<&'a ParameterSet<T>>,
    pub ablated: Option<&'a ParameterSet<T>>,
}

impl<'a, T> Default for Models<'a, T> {
    fn default() -> Self {
        Models { learned: None, ablated: None }
    }
}

impl<'a, T> Models<'a, T> {
    pub fn for_mode(&self, mode: ControllerMode) -> Option<&'a ParameterSet<T>> {
        match mode {
            ControllerMode::Baseline => None,
            ControllerMode::Ablated => self.ablated,
            ControllerMode::Learned => self.learned,
        }
    }
}

/// The grid a benchmark sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPlan {
    pub modes: Vec<ControllerMode>,
    pub speeds: Vec<f64>,
    pub laps_per_cell: usize,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub mode: ControllerMode,
    pub speed: f64,
    pub laps: usize,
    pub faulted_laps: usize,
    pub completed_laps: usize,
    pub attempts: usize,
    pub failures: usize,
    pub collisions: usize,
    pub stuck: usize,
    pub failure_rate: f64,
    pub success_rate: f64,
    pub mean_cross_track: f64,
    pub mean_lap_time: Option<f64>,
    pub mean_objective_j: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnStats {
    pub mode: ControllerMode,
    pub turn: String,
    pub attempts: usize,
    pub failures: usize,
    pub failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeStats {
    pub mode: ControllerMode,
    pub laps: usize,
    pub faulted_laps: usize,
    pub attempts: usize,
    pub failures: usize,
    pub success_rate: f64,
}

/// Aggregated benchmark outcome. Faulted laps are counted but contribute no attempts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub modes: Vec<ControllerMode>,
    pub speeds: Vec<f64>,
    pub laps_per_cell: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub config_hash: Option<String>,
    pub per_cell: Vec<CellStats>,
    pub per_turn: Vec<TurnStats>,
    pub overall: Vec<ModeStats>,
}

impl BenchmarkReport {
    pub fn cell(&self, mode: ControllerMode, speed: f64) -> Option<&CellStats> {
        self.per_cell.iter().find(|c| c.mode == mode && c.speed == speed)
    }

    pub fn overall(&self, mode: ControllerMode) -> Option<&ModeStats> {
        self.overall.iter().find(|m| m.mode == mode)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn rate(failures: usize, attempts: usize) -> f64 {
    if attempts == 0 {
        0.0
    } else {
        failures as f64 / attempts as f64
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Pool lap results into per-(mode, speed), per-(mode, turn) and per-mode counts.
pub fn aggregate(plan: &BenchmarkPlan, turn_labels: &[String], laps: &[LapResult]) -> BenchmarkReport {
    let valid = |l: &&LapResult| l.fault.is_none();
    let mut per_cell = Vec::new();
    let mut per_turn = Vec::new();
    let mut overall = Vec::new();
    for &mode in &plan.modes {
        let of_mode: Vec<&LapResult> = laps.iter().filter(|l| l.mode == mode).collect();
        for &speed in &plan.speeds {
            let cell: Vec<&LapResult> = of_mode.iter().copied().filter(|l| l.target_speed == speed).collect();
            let ok: Vec<&LapResult> = cell.iter().copied().filter(valid).collect();
            let count = |o: TurnOutcome| ok.iter().map(|l| l.turn_outcomes.iter().filter(|x| **x == o).count()).sum::<usize>();
            let attempts: usize = ok.iter().map(|l| l.turn_outcomes.len()).sum();
            let failures: usize = ok.iter().map(|l| l.failures()).sum();
            let failure_rate = rate(failures, attempts);
            per_cell.push(CellStats {
                mode,
                speed,
                laps: cell.len(),
                faulted_laps: cell.len() - ok.len(),
                completed_laps: ok.iter().filter(|l| l.lap_time.is_some()).count(),
                attempts,
                failures,
                collisions: count(TurnOutcome::Collision),
                stuck: count(TurnOutcome::Stuck),
                failure_rate,
                success_rate: 1.0 - failure_rate,
                mean_cross_track: mean(ok.iter().map(|l| l.mean_cross_track)).unwrap_or(0.0),
                mean_lap_time: mean(ok.iter().filter_map(|l| l.lap_time)),
                mean_objective_j: mean(ok.iter().filter_map(|l| l.objective_j)),
            });
        }
        let ok: Vec<&LapResult> = of_mode.iter().copied().filter(valid).collect();
        for (t, label) in turn_labels.iter().enumerate() {
            let attempts = ok.iter().filter(|l| l.turn_outcomes.len() > t).count();
            let failures = ok.iter().filter(|l| l.turn_outcomes.get(t).is_some_and(|o| o.failed())).count();
            per_turn.push(TurnStats {
                mode,
                turn: label.clone(),
                attempts,
                failures,
                failure_rate: rate(failures, attempts),
            });
        }
        let attempts: usize = ok.iter().map(|l| l.turn_outcomes.len()).sum();
        let failures: usize = ok.iter().map(|l| l.failures()).sum();
        overall.push(ModeStats {
            mode,
            laps: of_mode.len(),
            faulted_laps: of_mode.len() - ok.len(),
            attempts,
            failures,
            success_rate: 1.0 - rate(failures, attempts),
        });
    }
    BenchmarkReport {
        modes: plan.modes.clone(),
        speeds: plan.speeds.clone(),
        laps_per_cell: plan.laps_per_cell,
        base_seed: plan.base_seed,
        config_hash: None,
        per_cell,
        per_turn,
        overall,
    }
}

/// Run every (mode, speed, lap) with lap seeds `base_seed + lap`. With more
/// than one worker laps run on scoped threads; results are gathered back into
/// grid order so the report does not depend on scheduling.
pub fn run_benchmark<T: Scalar>(
    track: &Track<T>,
    field: &TerrainField<T>,
    plan: &BenchmarkPlan,
    models: Models<'_, T>,
    cfg: &EvalConfig<T>,
    workers: usize,
) -> Result<(BenchmarkReport, Vec<LapResult>)> {
    if plan.modes.is_empty() || plan.speeds.is_empty() || plan.laps_per_cell == 0 {
        return Err(Error::Config("benchmark needs at least one mode, speed and lap".into()));
    }
    if plan.speeds.iter().any(|v| !(*v > 0.0 && *v <= crate::sim::MAX_SPEED)) {
        return Err(Error::Config(format!("target speeds must lie in (0, {}]", crate::sim::MAX_SPEED)));
    }
    for &mode in &plan.modes {
        if mode != ControllerMode::Baseline && models.for_mode(mode).is_none() {
            return Err(Error::Config(format!("{mode} controller needs trained parameters")));
        }
    }
    cfg.validate()?;
    field.validate()?;
    let jobs: Vec<(ControllerMode, f64, u64)> = plan
        .modes
        .iter()
        .flat_map(|&m| {
            plan.speeds.iter().flat_map(move |&v| {
                (0..plan.laps_per_cell as u64).map(move |lap| (m, v, plan.base_seed.wrapping_add(lap)))
            })
        })
        .collect();
    let run = |&(mode, speed, seed): &(ControllerMode, f64, u64)| {
        run_lap(track, field, mode, models.for_mode(mode), speed, seed, cfg)
    };
    let workers = workers.max(1).min(jobs.len());
    let laps: Vec<LapResult> = if workers == 1 {
        jobs.iter().map(run).collect::<Result<_>>()?
    } else {
        let chunk = jobs.len().div_ceil(workers);
        let parts: Vec<Result<Vec<LapResult>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .chunks(chunk)
                .map(|part| scope.spawn(move || part.iter().map(run).collect::<Result<Vec<_>>>()))
                .collect();
            handles.into_iter().map(|h| h.join().expect("benchmark worker panicked")).collect()
        });
        let mut laps = Vec::with_capacity(jobs.len());
        for part in parts {
            laps.extend(part?);
        }
        laps
    };
    let labels: Vec<String> = track.gate_spans().iter().map(|g| g.label.clone()).collect();
    Ok((aggregate(plan, &labels, &laps), laps))
}

pub const SPEED_TABLE_HEADER: &str = "mode,speed,attempts,failures,failure_rate";
pub const TURN_TABLE_HEADER: &str = "mode,turn,attempts,failures,failure_rate";
pub const LAP_TABLE_HEADER: &str = "mode,speed,seed,lap_time,failures,mean_cross_track,max_cross_track,objective_j,fault";

pub fn write_speed_table<W: Write>(out: &mut W, report: &BenchmarkReport) -> std::io::Result<()> {
    writeln!(out, "{SPEED_TABLE_HEADER}")?;
    for c in &report.per_cell {
        writeln!(out, "{},{},{},{},{}", c.mode, c.speed, c.attempts, c.failures, c.failure_rate)?;
    }
    Ok(())
}

pub fn write_turn_table<W: Write>(out: &mut W, report: &BenchmarkReport) -> std::io::Result<()> {
    writeln!(out, "{TURN_TABLE_HEADER}")?;
    for t in &report.per_turn {
        writeln!(out, "{},{},{},{},{}", t.mode, t.turn, t.attempts, t.failures, t.failure_rate)?;
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Write `report.json`, `speed_failure.csv`, `turn_failure.csv`, `laps.csv`
/// and one trajectory CSV per lap under `laps/`.
pub fn export_report(report: &BenchmarkReport, laps: &[LapResult], out_dir: &Path) -> Result<()> {
    if laps.is_empty() {
        return Err(Error::Data("no laps to export".into()));
    }
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |e| Error::io(p, e)
    };
    let lap_dir = out_dir.join("laps");
    fs::create_dir_all(&lap_dir).map_err(io(&lap_dir))?;
    let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<()> {
        let path = out_dir.join(name);
        let mut buf = Vec::new();
        f(&mut buf).map_err(io(&path))?;
        fs::write(&path, buf).map_err(io(&path))
    };
    write("report.json", &|b| b.write_all(report.to_json().as_bytes()))?;
    write("speed_failure.csv", &|b| write_speed_table(b, report))?;
    write("turn_failure.csv", &|b| write_turn_table(b, report))?;
    write("laps.csv", &|b| {
        writeln!(b, "{LAP_TABLE_HEADER}")?;
        for l in laps {
            writeln!(
                b,
                "{},{},{},{},{},{},{},{},{}",
                l.mode,
                l.target_speed,
                l.seed,
                opt(l.lap_time),
                l.failures(),
                l.mean_cross_track,
                l.max_cross_track,
                opt(l.objective_j),
                l.fault.as_deref().unwrap_or("").replace(',', ";")
            )?;
        }
        Ok(())
    })?;
    for l in laps {
        let path = lap_dir.join(format!("{}_{}_{}.csv", l.mode, l.target_speed, l.seed));
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &l.trajectory).map_err(io(&path))?;
        fs::write(&path, buf).map_err(io(&path))?;
    }
    Ok(())
}
