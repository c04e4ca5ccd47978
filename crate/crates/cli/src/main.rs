//! `ikd`: collect exploration data, train the inverse model, benchmark controllers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use ikd_core::control::ControllerMode;
use ikd_core::data::{histogram, range_coverage, Dataset};
use ikd_core::eval::{export_report, write_speed_table, write_turn_table};
use ikd_core::nn::{save_params, write_loss_curve};
use ikd_core::run::{benchmark, collect_dataset, load_models, train_model, RunConfig};
use ikd_core::sim::{MAX_CURVATURE, MAX_SPEED};

#[derive(Parser)]
#[command(name = "ikd", version, about = "Learned inverse kinodynamics for a simulated ground vehicle")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "configs/demo.toml")]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the configuration and every referenced scenario, then exit.
    Validate,
    /// Explore the arena and write a dataset.
    Collect {
        /// Also write the dataset as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Train a network on the collected dataset.
    Train {
        /// Train the network without the IMU encoder.
        #[arg(long)]
        ablated: bool,
    },
    /// Run the benchmark grid and export tables.
    Bench {
        /// Restrict to these controllers (repeatable).
        #[arg(long = "controller")]
        controllers: Vec<ControllerMode>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

/// Failure classes mapped to exit codes 1 and 2.
enum Failure {
    Invalid(anyhow::Error),
    Runtime(anyhow::Error),
}

fn invalid<T>(r: Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Invalid)
}

fn runtime<T>(r: Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Runtime)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("fault: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&cli.config).with_context(|| format!("loading {}", cli.config.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.paths.out = std::path::absolute(out)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = invalid(load_config(&cli))?;
    match cli.command {
        Command::Validate => invalid(validate(&cfg)),
        Command::Collect { csv } => {
            invalid(cfg.arena_scenario().map_err(Into::into).map(drop))?;
            runtime(collect(&cfg, csv.as_deref()))
        }
        Command::Train { ablated } => {
            let path = cfg.dataset_path();
            let dataset = invalid(Dataset::load(&path).with_context(|| format!("reading dataset {}", path.display())))?;
            runtime(train(&cfg, &dataset, ablated))
        }
        Command::Bench { controllers, workers } => {
            if !controllers.is_empty() {
                cfg.bench.modes = controllers;
            }
            if let Some(w) = workers {
                cfg.bench.workers = w;
            }
            invalid(cfg.track_scenario().map_err(Into::into).map(drop))?;
            let (learned, ablated) = invalid(load_models(&cfg).map_err(Into::into))?;
            runtime(bench(&cfg, learned.as_ref(), ablated.as_ref()))
        }
    }
}

fn validate(cfg: &RunConfig) -> Result<()> {
    let track = cfg.track_scenario()?;
    let arena = cfg.arena_scenario()?;
    let t = track.require_track()?;
    println!(
        "track {}: {:.1} m, {} turns, {} terrain patches",
        track.name,
        t.plan.total_length(),
        t.gate_spans().len(),
        track.terrain.patches.len()
    );
    println!("arena {}: {} terrain patches", arena.name, arena.terrain.patches.len());
    println!("config hash {}", cfg.hash());
    Ok(())
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn print_histogram(name: &str, values: &[f64], lo: f64, hi: f64) {
    let bins = 9;
    let counts = histogram(values.iter().copied(), lo, hi, bins);
    let peak = counts.iter().copied().max().unwrap_or(0).max(1);
    let coverage = range_coverage(values.iter().copied(), lo, hi);
    println!("{name}: coverage {:.0}% of [{lo}, {hi}]", 100.0 * coverage);
    let width = (hi - lo) / bins as f64;
    for (k, n) in counts.iter().enumerate() {
        let bar = "#".repeat(40 * n / peak);
        println!("  {:>6.2} {:>7} {bar}", lo + width * (k as f64 + 0.5), n);
    }
}

fn collect(cfg: &RunConfig, csv: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let dataset = collect_dataset(cfg)?;
    let path = cfg.dataset_path();
    ensure_parent(&path)?;
    dataset.save(&path)?;
    println!("{} samples in {:.1} s -> {}", dataset.len(), start.elapsed().as_secs_f64(), path.display());
    let col = |f: fn(&ikd_core::data::TrainingSample) -> f32| -> Vec<f64> {
        dataset.samples.iter().map(|s| f(s) as f64).collect()
    };
    print_histogram("v_cmd", &col(|s| s.v_cmd), 0.0, MAX_SPEED);
    print_histogram("c_cmd", &col(|s| s.c_cmd), -MAX_CURVATURE, MAX_CURVATURE);
    print_histogram("v_r", &col(|s| s.v_r), 0.0, MAX_SPEED);
    print_histogram("c_r", &col(|s| s.c_r), -MAX_CURVATURE, MAX_CURVATURE);
    if let Some(csv) = csv {
        ensure_parent(csv)?;
        let mut out = std::io::BufWriter::new(fs::File::create(csv).with_context(|| format!("creating {}", csv.display()))?);
        dataset.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn train(cfg: &RunConfig, dataset: &Dataset, ablated: bool) -> Result<()> {
    if dataset.is_empty() {
        bail!("dataset is empty");
    }
    let start = Instant::now();
    let outcome = train_model(cfg, dataset, ablated)?;
    let path = cfg.params_path(ablated);
    ensure_parent(&path)?;
    save_params(&outcome.params, &path)?;
    let curve_path = path.with_extension("loss.csv");
    let mut buf = Vec::new();
    write_loss_curve(&mut buf, &outcome.curve)?;
    fs::write(&curve_path, buf).with_context(|| format!("writing {}", curve_path.display()))?;
    let best = &outcome.curve[outcome.best_epoch];
    println!(
        "{} network: best epoch {} (validation loss {:.5}, initial {:.5}) in {:.1} s -> {}",
        if ablated { "ablated" } else { "full" },
        outcome.best_epoch,
        best.val_loss,
        outcome.curve[0].val_loss,
        start.elapsed().as_secs_f64(),
        path.display()
    );
    Ok(())
}

fn bench(
    cfg: &RunConfig,
    learned: Option<&ikd_core::nn::ParameterSet<f64>>,
    ablated: Option<&ikd_core::nn::ParameterSet<f64>>,
) -> Result<()> {
    let start = Instant::now();
    let (report, laps) = benchmark(cfg, learned, ablated)?;
    let dir = cfg.report_dir();
    export_report(&report, &laps, &dir)?;
    let mut stdout = std::io::stdout().lock();
    write_speed_table(&mut stdout, &report)?;
    writeln!(stdout)?;
    write_turn_table(&mut stdout, &report)?;
    writeln!(stdout)?;
    for m in &report.overall {
        writeln!(
            stdout,
            "{}: success rate {:.3} ({} failures / {} attempts)",
            m.mode, m.success_rate, m.failures, m.attempts
        )?;
    }
    writeln!(stdout, "{} laps in {:.1} s -> {}", laps.len(), start.elapsed().as_secs_f64(), dir.display())?;
    Ok(())
}
