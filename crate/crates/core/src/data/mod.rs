//! Exploration data collection, labelling, storage and splitting.

mod collect;
mod dataset;
mod policy;

pub use collect::{align, arena_start, collect, terrain_hash, V_MIN_LABEL};
pub use dataset::{
    csv_header, histogram, range_coverage, split, Dataset, Provenance, TrainingSample, DATASET_MAGIC, DATASET_VERSION,
    VALUES_PER_SAMPLE,
};
pub use policy::{Bounce, ExplorationPolicy, PolicyRunner};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::sim::{grip_factor, SimConfig, Simulator, TerrainField, TerrainParams, VehicleState, WINDOW_LEN};

    fn ideal() -> TerrainField<f64> {
        TerrainField::uniform(TerrainParams::ideal())
    }

    fn arena_policy(seed: u64) -> ExplorationPolicy {
        ExplorationPolicy {
            rng_seed: seed,
            bounce: Some(Bounce { center: [0.0, 0.0], radius: 8.0 }),
            ..Default::default()
        }
    }

    #[test]
    fn ten_seconds_without_rejections() {
        let policy = ExplorationPolicy { v_range: [1.0, 2.0], ..Default::default() };
        let d = collect(&ideal(), &SimConfig::zero_lag(), &policy, 10.0, VehicleState::default()).unwrap();
        // 200 control steps less 10 of window warm-up
        assert_eq!(d.len(), 190);
        assert!((d.samples[0].time - 0.5).abs() < 1e-9);
        d.validate().unwrap();
    }

    #[test]
    fn zero_speed_policy_yields_empty_dataset() {
        let d = collect(&ideal(), &SimConfig::default(), &ExplorationPolicy::constant(0.0, 0.5), 5.0, VehicleState::default()).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn too_short_duration_faults() {
        let cfg = SimConfig::default();
        for duration in [0.0, 0.5, f64::NAN] {
            assert!(collect(&ideal(), &cfg, &ExplorationPolicy::default(), duration, VehicleState::default()).is_err());
        }
        assert!(collect(&ideal(), &cfg, &ExplorationPolicy::default(), 0.55, VehicleState::default()).is_ok());
    }

    #[test]
    fn no_slip_labels_equal_commands() {
        let d = collect(&ideal(), &SimConfig::zero_lag(), &arena_policy(3), 60.0, VehicleState::default()).unwrap();
        assert!(d.len() > 800);
        for s in &d.samples {
            assert!((s.c_r - s.c_cmd).abs() < 1e-3, "{s:?}");
            assert!((s.v_r - s.v_cmd).abs() < 1e-5);
        }
    }

    #[test]
    fn held_command_labels_recover_grip_factor() {
        let slick = TerrainParams::new(0.5, 0.0, 0.0);
        let field = TerrainField::uniform(slick);
        let cfg = SimConfig::<f64>::default();
        let d = collect(&field, &cfg, &ExplorationPolicy::constant(1.0, 0.5), 5.0, VehicleState::default()).unwrap();
        let expected = 0.5 * grip_factor(&slick, 1.0, cfg.understeer_gain);
        let last = d.samples.last().unwrap();
        assert!((last.c_r as f64 - expected).abs() < 1e-4, "{} vs {expected}", last.c_r);
        assert!((expected - 0.25).abs() < 1e-12);
        assert_eq!(last.c_cmd, 0.5);
    }

    #[test]
    fn stored_window_precedes_command_time() {
        let field = TerrainField::uniform(TerrainParams::new(0.8, 0.3, 0.0));
        let cfg = SimConfig::default().with_seed(4);
        let policy = arena_policy(9);
        let d = collect(&field, &cfg, &policy, 2.0, VehicleState::default()).unwrap();

        // independent replay: same seeds, same commands, read the window at t
        let mut runner = policy.runner().unwrap();
        let mut sim = Simulator::new(&field, cfg, VehicleState::default()).unwrap();
        let mut expected = None;
        for _ in 0..40 {
            let u = runner.next_command(sim.state(), 0.05);
            if (sim.state().time - d.samples[3].time).abs() < 1e-9 {
                expected = sim.window();
                let newest_gyro = sim.imu_history().last().unwrap().gyro_z;
                assert_eq!(expected.as_ref().unwrap()[WINDOW_LEN - 1], newest_gyro);
            }
            sim.advance(u).unwrap();
        }
        let expected: Vec<f32> = expected.unwrap().iter().map(|v| *v as f32).collect();
        assert_eq!(d.samples[3].window, expected);
    }

    #[test]
    fn exploration_covers_command_ranges() {
        let field = TerrainField::uniform(TerrainParams::new(0.9, 0.1, 0.0));
        let d = collect(&field, &SimConfig::default(), &arena_policy(1), 600.0, VehicleState::default()).unwrap();
        let v = range_coverage(d.samples.iter().map(|s| s.v_cmd as f64), 0.0, 3.0);
        let c = range_coverage(d.samples.iter().map(|s| s.c_cmd as f64), -1.35, 1.35);
        assert!(v >= 0.9 && c >= 0.9, "v {v} c {c}");
        let occupied = histogram(d.samples.iter().map(|s| s.c_cmd as f64), -1.35, 1.35, 10).iter().filter(|n| **n > 0).count();
        assert_eq!(occupied, 10);
        // stays near the arena
        assert!(d.samples.len() > 9000);
    }

    fn synthetic(n: usize, spacing: f64) -> Dataset {
        Dataset {
            samples: (0..n)
                .map(|i| TrainingSample {
                    v_r: 1.0 + i as f32 * 1e-3,
                    c_r: -0.5,
                    v_cmd: 1.5,
                    c_cmd: 0.25 * (i % 7) as f32,
                    window: (0..WINDOW_LEN).map(|j| (i * 7 + j) as f32 * 0.01).collect(),
                    time: i as f64 * spacing,
                })
                .collect(),
            provenance: Provenance {
                label_horizon: 0.05,
                window_span: 0.5,
                v_min_label: 0.2,
                ..Default::default()
            },
        }
    }

    #[test]
    fn split_sizes_and_contiguity() {
        let d = synthetic(1000, 1.0);
        let (train, val) = split(&d, 0.1, 7).unwrap();
        assert_eq!((train.len(), val.len()), (900, 100));
        let t0 = val.samples[0].time;
        assert!(val.samples.iter().enumerate().all(|(i, s)| s.time == t0 + i as f64));
        assert_eq!(split(&d, 0.1, 7).unwrap(), (train, val));
        let (train, val) = split(&d, 0.0, 7).unwrap();
        assert_eq!((train.len(), val.len()), (1000, 0));
    }

    #[test]
    fn split_windows_never_overlap() {
        let d = synthetic(300, 0.05);
        for seed in 0..20 {
            let (train, val) = split(&d, 0.2, seed).unwrap();
            assert_eq!(val.len(), 60);
            for a in &train.samples {
                for b in &val.samples {
                    let (a0, a1) = (a.time - 0.5, a.time + 0.05);
                    let (b0, b1) = (b.time - 0.5, b.time + 0.05);
                    assert!(a1 <= b0 || b1 <= a0, "train {} overlaps validation {}", a.time, b.time);
                }
            }
        }
    }

    #[test]
    fn binary_round_trip_and_faults() {
        let mut d = synthetic(5, 0.05);
        d.provenance.terrain_hash = "abc".into();
        d.samples[2].c_r = -0.0;
        let bytes = d.encode();
        assert_eq!(Dataset::decode(&bytes).unwrap(), d);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Dataset::decode(&bad), Err(crate::Error::Format { .. })));
        assert!(Dataset::decode(&bytes[..bytes.len() - 1]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(Dataset::decode(&long).is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.bin");
        d.save(&path).unwrap();
        assert_eq!(Dataset::load(&path).unwrap(), d);
    }

    #[test]
    fn csv_has_header_plus_rows() {
        let d = synthetic(12, 0.05);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 13);
        assert_eq!(lines[0].split(',').count(), 5 + WINDOW_LEN);
        assert!(lines[0].ends_with("gyro_z_99"));
    }

    #[test]
    fn conversion_to_network_samples() {
        let d = synthetic(3, 0.05);
        let s = d.to_samples::<f64>();
        assert_eq!(s.motion[[1, 0]], d.samples[1].v_r as f64);
        assert_eq!(s.labels[[2, 1]], d.samples[2].c_cmd as f64);
        assert_eq!(s.windows.unwrap().dim(), (3, WINDOW_LEN));
    }

    #[test]
    fn collection_is_deterministic() {
        let field = TerrainField::uniform(TerrainParams::new(0.8, 0.3, 0.0)).with_patch(crate::sim::TerrainPatch::rectangle(
            "grass",
            Point2::new(-2.0, -2.0),
            Point2::new(2.0, 2.0),
            TerrainParams::new(0.7, 0.4, 0.0),
        ));
        let cfg = SimConfig::default().with_seed(11);
        let a = collect(&field, &cfg, &arena_policy(2), 8.0, VehicleState::default()).unwrap();
        let b = collect(&field, &cfg, &arena_policy(2), 8.0, VehicleState::default()).unwrap();
        assert_eq!(a.encode(), b.encode());
    }

    proptest::proptest! {
        #[test]
        fn encoding_round_trips(vals in proptest::collection::vec(-1e6f32..1e6, 4..8), time in 0.0f64..1e4) {
            let s = TrainingSample {
                v_r: vals[0], c_r: vals[1], v_cmd: vals[2], c_cmd: vals[3],
                window: (0..WINDOW_LEN).map(|i| vals[i % vals.len()] * i as f32).collect(),
                time,
            };
            let d = Dataset { samples: vec![s], provenance: Provenance::default() };
            proptest::prop_assert_eq!(Dataset::decode(&d.encode()).unwrap(), d);
        }
    }
}
