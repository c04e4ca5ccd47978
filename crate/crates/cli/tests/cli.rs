use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ikd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ikd"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let head = "seed = 5\n[paths]\ntrack = \"bundled:demo\"\narena = \"bundled:arena\"\nout = \"out\"\n";
    fs::write(&path, format!("{head}{body}")).unwrap();
    path
}

const SMALL: &str = "[collect]\nduration = 30.0\n[train]\nepochs = 1\n[bench]\nmodes = [\"baseline\", \"ablated\"]\nspeeds = [2.0]\nlaps_per_cell = 1\n";

#[test]
fn shipped_configs_validate() {
    for name in ["demo.toml", "unseen.toml"] {
        let cfg = repo_config(name);
        let o = ikd(&["validate", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("turns"));
    }
}

#[test]
fn malformed_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "surprise = true\n");
    let o = ikd(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let missing = dir.path().join("absent.toml");
    assert_eq!(code(&ikd(&["validate", "--config", missing.to_str().unwrap()])), 1);
}

#[test]
fn missing_inputs_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let o = ikd(&["train", "--config", cfg]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    let o = ikd(&["bench", "--config", cfg, "--controller", "learned"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("learned parameters"));
    assert_eq!(code(&ikd(&["bench", "--config", cfg, "--controller", "turbo"])), 1);
}

#[test]
fn too_short_collection_is_a_runtime_fault() {
    let dir = tempfile::tempdir().unwrap();
    for duration in ["0.0", "0.2"] {
        let cfg = write_config(dir.path(), &format!("[collect]\nduration = {duration}\n"));
        let o = ikd(&["collect", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn end_to_end_pipeline_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let cfg = cfg.to_str().unwrap();
    let csv = dir.path().join("data.csv");
    let o = ikd(&["collect", "--config", cfg, "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let n: usize = stdout.split_whitespace().next().unwrap().parse().unwrap();
    assert!(n > 500 && n <= 590, "{stdout}");
    assert!(stdout.contains("coverage"));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), n + 1);

    let o = ikd(&["train", "--config", cfg, "--ablated"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    assert!(out.join("ablated.ikdp").exists());
    assert!(out.join("ablated.loss.csv").exists());

    let o = ikd(&["bench", "--config", cfg, "--workers", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("bench/report.json")).unwrap();
    assert!(report.contains("config_hash"));
    for f in ["speed_failure.csv", "turn_failure.csv", "laps.csv"] {
        assert!(out.join("bench").join(f).exists(), "{f}");
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("success rate"));
}

#[test]
fn seed_and_out_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[collect]\nduration = 5.0\n");
    let cfg = cfg.to_str().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, seed) in [(&a, "1"), (&b, "2")] {
        let o = ikd(&["collect", "--config", cfg, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let da = fs::read(a.join("dataset.ikdd")).unwrap();
    let db = fs::read(b.join("dataset.ikdd")).unwrap();
    assert_ne!(da, db);
}

fn scenario_config(dir: &Path, scenario: &str) -> PathBuf {
    fs::write(dir.join("scenario.toml"), scenario).unwrap();
    let path = dir.join("run.toml");
    fs::write(&path, "[paths]\ntrack = \"scenario.toml\"\narena = \"bundled:arena\"\n").unwrap();
    path
}

#[test]
fn bad_scenarios_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let gate = "[track.plan]\nclosed = false\nwaypoints = [[0.0, 0.0], [10.0, 0.0]]\n[[track.gate]]\nlabel = \"T9\"\nentry = { a = [2.0, -1.0], b = [2.0, 1.0] }\nexit = { a = [20.0, -1.0], b = [20.0, 1.0] }\n";
    let cfg = scenario_config(dir.path(), gate);
    let o = ikd(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("T9") && err.contains("does not cross"), "{err}");

    let bowtie = "[[terrain.patch]]\nname = \"bowtie\"\nboundary = [[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]\ngrip = 0.5\n[track.plan]\nwaypoints = [[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]]\n";
    let cfg = scenario_config(dir.path(), bowtie);
    let o = ikd(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bowtie") && err.contains("self-intersecting"), "{err}");
}

#[test]
fn unknown_controller_lists_valid_modes() {
    let o = ikd(&["bench", "--controller", "turbo"]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("baseline, ablated, learned"), "{err}");
}

#[test]
fn full_grid_is_deterministic_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[collect]\nduration = 30.0\n[train]\nepochs = 1\n[bench]\nspeeds = [1.6, 1.8, 2.0, 2.2, 2.4]\nlaps_per_cell = 4\n";
    let cfg = write_config(dir.path(), body);
    let cfg = cfg.to_str().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&ikd(&["collect", "--config", cfg])), 0);
    let first = fs::read(out.join("dataset.ikdd")).unwrap();
    assert_eq!(code(&ikd(&["collect", "--config", cfg])), 0);
    assert_eq!(first, fs::read(out.join("dataset.ikdd")).unwrap());

    assert_eq!(code(&ikd(&["train", "--config", cfg])), 0);
    assert_eq!(code(&ikd(&["train", "--config", cfg, "--ablated"])), 0);
    let abl = ikd_core::nn::load_params::<f64>(&out.join("ablated.ikdp")).unwrap();
    assert!(!abl.use_encoder());
    assert!(ikd_core::nn::load_params::<f64>(&out.join("learned.ikdp")).unwrap().use_encoder());

    let o = ikd(&["bench", "--config", cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json = fs::read_to_string(out.join("bench/report.json")).unwrap();
    let report = ikd_core::eval::BenchmarkReport::from_json(&json).unwrap();
    assert_eq!(report.per_cell.len(), 15);
    assert_eq!(report.per_cell.iter().map(|c| c.laps).sum::<usize>(), 60);
    assert_eq!(fs::read_to_string(out.join("bench/laps.csv")).unwrap().lines().count(), 61);

    assert_eq!(code(&ikd(&["bench", "--config", cfg])), 0);
    assert_eq!(json, fs::read_to_string(out.join("bench/report.json")).unwrap());
}
