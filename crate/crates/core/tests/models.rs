use std::sync::OnceLock;

use ikd_core::control::{ablated_select, learned_select};
use ikd_core::data::{collect, split, Bounce, Dataset, ExplorationPolicy};
use ikd_core::geometry::Point2;
use ikd_core::nn::{train, LossWeights, NetworkSpec, TrainConfig, TrainOutcome};
use ikd_core::sim::{ControlInput, SimConfig, Simulator, TerrainField, TerrainParams, TerrainPatch, VehicleState};

fn policy(seed: u64) -> ExplorationPolicy {
    ExplorationPolicy {
        rng_seed: seed,
        bounce: Some(Bounce { center: [0.0, 0.0], radius: 9.0 }),
        ..Default::default()
    }
}

fn fit(ds: &Dataset, spec: NetworkSpec, epochs: usize) -> TrainOutcome<f64> {
    let (tr, va) = split(ds, 0.1, 3).unwrap();
    let cfg = TrainConfig { epochs, rng_seed: 3, ..Default::default() };
    train(&tr.to_samples(), &va.to_samples(), &spec, &LossWeights::default(), &cfg).unwrap()
}

fn best_val(o: &TrainOutcome<f64>) -> f64 {
    o.curve[o.best_epoch].val_loss
}

/// IMU window after cruising at `u` on a uniform patch of `terrain`.
fn window_on(terrain: TerrainParams<f64>, u: ControlInput<f64>) -> Vec<f64> {
    let field = TerrainField::uniform(terrain);
    let start = VehicleState::cruising(Point2::new(0.0, 0.0), 0.0, u.velocity, u.curvature);
    let mut sim = Simulator::new(&field, SimConfig::default().with_seed(9), start).unwrap();
    for _ in 0..20 {
        sim.advance(u).unwrap();
    }
    sim.window().unwrap()
}

fn ideal_identity() -> &'static (Dataset, TrainOutcome<f64>) {
    static CELL: OnceLock<(Dataset, TrainOutcome<f64>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let field = TerrainField::<f64>::uniform(TerrainParams::ideal());
        let ds = collect(&field, &SimConfig::zero_lag().with_seed(4), &policy(4), 240.0, VehicleState::default()).unwrap();
        let out = fit(&ds, NetworkSpec::full(), 40);
        (ds, out)
    })
}

const SMOOTH: TerrainParams<f64> = TerrainParams { grip: 1.0, roughness: 0.05, drag: 0.0 };
const ROUGH: TerrainParams<f64> = TerrainParams { grip: 0.8, roughness: 0.6, drag: 0.0 };

/// Arena split into a smooth half (x < 0) and a rough, lower-grip half.
fn two_terrain() -> &'static (TrainOutcome<f64>, TrainOutcome<f64>) {
    static CELL: OnceLock<(TrainOutcome<f64>, TrainOutcome<f64>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let field = TerrainField::uniform(SMOOTH).with_patch(TerrainPatch::rectangle(
            "rough",
            Point2::new(0.0, -40.0),
            Point2::new(40.0, 40.0),
            ROUGH,
        ));
        let ds = collect(&field, &SimConfig::default().with_seed(6), &policy(6), 360.0, VehicleState::default()).unwrap();
        (fit(&ds, NetworkSpec::full(), 25), fit(&ds, NetworkSpec::ablated(), 25))
    })
}

#[test]
fn identity_training_converges() {
    let (_, out) = ideal_identity();
    let reduction = 1.0 - best_val(out) / out.curve[0].val_loss;
    assert!(reduction >= 0.99, "reduction {reduction}");
}

#[test]
fn identity_network_returns_its_input() {
    let (_, out) = ideal_identity();
    for (v, c) in [(1.5, 0.6), (2.0, -0.4), (1.0, 0.0)] {
        let u = ControlInput::new(v, c);
        let field = TerrainField::<f64>::uniform(TerrainParams::ideal());
        let start = VehicleState::cruising(Point2::new(0.0, 0.0), 0.0, v, c);
        let mut sim = Simulator::new(&field, SimConfig::zero_lag().with_seed(1), start).unwrap();
        for _ in 0..20 {
            sim.advance(u).unwrap();
        }
        let y = learned_select(u, &sim.window().unwrap(), &out.params).unwrap();
        assert!((y.velocity - v).abs() < 0.1 && (y.curvature - c).abs() < 0.1, "({v}, {c}) -> {y:?}");
    }
}

#[test]
fn encoder_beats_ablation_on_two_terrains() {
    let (full, abl) = two_terrain();
    assert!(best_val(full) < best_val(abl), "full {} vs ablated {}", best_val(full), best_val(abl));
}

#[test]
fn rough_terrain_gets_amplified_curvature() {
    let (full, _) = two_terrain();
    let desired = ControlInput::new(1.5, 0.3);
    let y = learned_select(desired, &window_on(ROUGH, desired), &full.params).unwrap();
    assert!(y.curvature.abs() > desired.curvature.abs(), "{y:?}");
}

#[test]
fn ablation_sits_between_the_terrain_specific_corrections() {
    let (full, abl) = two_terrain();
    let desired = ControlInput::new(1.5, 0.3);
    let on_smooth = learned_select(desired, &window_on(SMOOTH, desired), &full.params).unwrap().curvature;
    let on_rough = learned_select(desired, &window_on(ROUGH, desired), &full.params).unwrap().curvature;
    let averaged = ablated_select(desired, &abl.params).unwrap().curvature;
    assert!(on_rough > on_smooth + 0.1, "smooth {on_smooth}, rough {on_rough}");
    let tol = 0.05;
    assert!(averaged > on_smooth - tol && averaged < on_rough + tol, "{on_smooth} <= {averaged} <= {on_rough}");
}

#[test]
fn thirty_minutes_gives_tens_of_thousands_of_samples() {
    let field = TerrainField::uniform(TerrainParams::new(1.0, 0.05, 0.0));
    let ds = collect(&field, &SimConfig::default().with_seed(2), &policy(2), 1800.0, VehicleState::default()).unwrap();
    assert!((20_000..=36_000).contains(&ds.len()), "{}", ds.len());
}
