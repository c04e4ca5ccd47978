//! Global plan, projection, receding-horizon targets and track structure.

mod builder;
mod path;
mod track;

pub use builder::PathBuilder;
pub use path::{CarrotTarget, GlobalPlan, PlanSpec, Projection, LOOKAHEAD, MAX_SEGMENT, PROJECTION_WINDOW};
pub use track::{gate_crossings, offset_polyline, BoundarySpec, GateSpan, Track, TrackSpec, TurnGate};
