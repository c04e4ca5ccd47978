//! Lap-based benchmark: per-turn failure detection, tracking metrics, the lap
//! objective and report export.

mod lap;
mod report;

pub use lap::{objective_j, run_lap, EvalConfig, LapResult, TurnOutcome};
pub use report::{
    aggregate, export_report, run_benchmark, write_speed_table, write_turn_table, BenchmarkPlan, BenchmarkReport,
    CellStats, ModeStats, Models, TurnStats, LAP_TABLE_HEADER, SPEED_TABLE_HEADER, TURN_TABLE_HEADER,
};
