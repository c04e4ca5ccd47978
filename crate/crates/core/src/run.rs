//! Config-driven pipeline: collect, train and benchmark from one TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::ControllerMode;
use crate::data::{arena_start, collect, split, Dataset, ExplorationPolicy};
use crate::error::{Error, Result};
use crate::eval::{run_benchmark, BenchmarkPlan, BenchmarkReport, EvalConfig, LapResult, Models};
use crate::files::{bundled, sha256_hex, Scenario};
use crate::nn::{load_params, train, LossWeights, NetworkSpec, ParameterSet, TrainConfig, TrainOutcome};
use crate::sim::SimConfig;

/// File locations. Relative paths resolve against the config file's directory;
/// `bundled:NAME` selects a scenario shipped with the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub track: String,
    /// Exploration ground; defaults to the track scenario's terrain.
    #[serde(default)]
    pub arena: Option<String>,
    /// Directory for every artifact not given an explicit path.
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub dataset: Option<PathBuf>,
    #[serde(default)]
    pub learned: Option<PathBuf>,
    #[serde(default)]
    pub ablated: Option<PathBuf>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CollectConfig {
    /// Simulated seconds of exploration.
    pub duration: f64,
    pub policy: ExplorationPolicy,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            duration: 600.0,
            policy: ExplorationPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub modes: Vec<ControllerMode>,
    pub speeds: Vec<f64>,
    pub laps_per_cell: usize,
    pub workers: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            modes: ControllerMode::ALL.to_vec(),
            speeds: vec![1.6, 1.8, 2.0, 2.2, 2.4],
            laps_per_cell: 10,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub sim: SimConfig<f64>,
    #[serde(default)]
    pub collect: CollectConfig,
    #[serde(default)]
    pub train: TrainConfig,
    /// Diagonal of the loss weighting H over {v, c}.
    #[serde(default = "default_h")]
    pub loss_weights: [f64; 2],
    #[serde(default)]
    pub eval: EvalConfig<f64>,
    #[serde(default)]
    pub bench: BenchConfig,
    /// Directory relative paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_h() -> [f64; 2] {
    [1.0, 4.0]
}

impl RunConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.train.validate()?;
        self.collect.policy.validate()?;
        self.eval.validate()?;
        LossWeights::<f64>::diag(self.loss_weights[0], self.loss_weights[1])?;
        if !(self.collect.duration >= 0.0) {
            return Err(Error::Config("collect.duration must be >= 0".into()));
        }
        Ok(())
    }

    /// SHA-256 over the effective settings, seed included.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn scenario(&self, source: &str) -> Result<Scenario<f64>> {
        match source.strip_prefix("bundled:") {
            Some(name) => bundled(name),
            None => {
                let path = self.resolve(Path::new(source));
                if !path.exists() {
                    return Err(Error::Config(format!("scenario file {} does not exist", path.display())));
                }
                Scenario::load(&path)
            }
        }
    }

    pub fn track_scenario(&self) -> Result<Scenario<f64>> {
        let s = self.scenario(&self.paths.track)?;
        s.require_track()?;
        Ok(s)
    }

    pub fn arena_scenario(&self) -> Result<Scenario<f64>> {
        match &self.paths.arena {
            Some(a) => self.scenario(a),
            None => self.scenario(&self.paths.track),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.paths.out)
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.paths.dataset.as_ref().map(|p| self.resolve(p)).unwrap_or_else(|| self.out_dir().join("dataset.ikdd"))
    }

    pub fn params_path(&self, ablated: bool) -> PathBuf {
        let (explicit, name) = if ablated {
            (&self.paths.ablated, "ablated.ikdp")
        } else {
            (&self.paths.learned, "learned.ikdp")
        };
        explicit.as_ref().map(|p| self.resolve(p)).unwrap_or_else(|| self.out_dir().join(name))
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out_dir().join("bench")
    }

    pub fn policy(&self, arena: &Scenario<f64>) -> ExplorationPolicy {
        let mut policy = self.collect.policy.clone();
        policy.rng_seed = self.seed;
        if policy.bounce.is_none() {
            policy.bounce = arena.arena;
        }
        policy
    }

    pub fn sim_config(&self) -> SimConfig<f64> {
        self.sim.with_seed(self.seed)
    }

    pub fn eval_config(&self) -> EvalConfig<f64> {
        EvalConfig { sim: self.sim, ..self.eval }
    }

    pub fn network_spec(ablated: bool) -> NetworkSpec {
        if ablated {
            NetworkSpec::ablated()
        } else {
            NetworkSpec::full()
        }
    }
}

/// Explore the arena scenario for `collect.duration` seconds.
pub fn collect_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let arena = cfg.arena_scenario()?;
    let policy = cfg.policy(&arena);
    let mut ds = collect(&arena.terrain, &cfg.sim_config(), &policy, cfg.collect.duration, arena_start(&policy))?;
    ds.provenance.config_hash = Some(cfg.hash());
    Ok(ds)
}

/// Train the full or ablated network on a seeded contiguous split of `dataset`.
pub fn train_model(cfg: &RunConfig, dataset: &Dataset, ablated: bool) -> Result<TrainOutcome<f64>> {
    let (train_set, validation) = split(dataset, cfg.train.validation_fraction, cfg.seed)?;
    let h = LossWeights::diag(cfg.loss_weights[0], cfg.loss_weights[1])?;
    let tc = TrainConfig {
        rng_seed: cfg.seed,
        ..cfg.train
    };
    let mut out = train(
        &train_set.to_samples(),
        &validation.to_samples(),
        &RunConfig::network_spec(ablated),
        &h,
        &tc,
    )?;
    out.params.provenance = format!(
        "config {}; dataset {}; seed {}",
        cfg.hash(),
        sha256_hex(&dataset.encode()),
        cfg.seed
    );
    Ok(out)
}

/// Load the parameter files the configured modes need.
pub fn load_models(cfg: &RunConfig) -> Result<(Option<ParameterSet<f64>>, Option<ParameterSet<f64>>)> {
    let load = |mode: ControllerMode, ablated: bool| -> Result<Option<ParameterSet<f64>>> {
        if !cfg.bench.modes.contains(&mode) {
            return Ok(None);
        }
        let path = cfg.params_path(ablated);
        if !path.exists() {
            return Err(Error::Config(format!("{mode} parameters {} do not exist", path.display())));
        }
        let p = load_params(&path)?;
        if p.use_encoder() == ablated {
            return Err(Error::Config(format!("{} holds the wrong network kind for {mode}", path.display())));
        }
        Ok(Some(p))
    };
    Ok((load(ControllerMode::Learned, false)?, load(ControllerMode::Ablated, true)?))
}

/// Run the configured benchmark grid on the track scenario.
pub fn benchmark(
    cfg: &RunConfig,
    learned: Option<&ParameterSet<f64>>,
    ablated: Option<&ParameterSet<f64>>,
) -> Result<(BenchmarkReport, Vec<LapResult>)> {
    let scenario = cfg.track_scenario()?;
    let track = scenario.require_track()?;
    let plan = BenchmarkPlan {
        modes: cfg.bench.modes.clone(),
        speeds: cfg.bench.speeds.clone(),
        laps_per_cell: cfg.bench.laps_per_cell,
        base_seed: cfg.seed,
    };
    let (mut report, laps) = run_benchmark(
        track,
        &scenario.terrain,
        &plan,
        Models { learned, ablated },
        &cfg.eval_config(),
        cfg.bench.workers,
    )?;
    report.config_hash = Some(cfg.hash());
    Ok((report, laps))
}
