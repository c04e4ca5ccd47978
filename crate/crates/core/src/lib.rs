//! Learned inverse kinodynamics for terrain-aware high-speed navigation.
//!
//! The crate bundles a terrain-dependent vehicle simulator whose surface
//! parameters are hidden from the controllers, a global plan with
//! receding-horizon targets, three controllers (an ideal-model sampling
//! baseline, a learned inverse model without observations, and the full
//! IMU-conditioned learned inverse model), a small from-scratch network
//! trainer, a data-collection harness and a lap benchmark.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the type aliases
//! below fix the scalar to `f64`, which is what the pipeline uses end to end.

pub mod control;
pub mod data;
pub mod error;
pub mod eval;
pub mod files;
pub mod geometry;
pub mod nn;
pub mod plan;
pub mod run;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geometry::Point2<f64>;
pub type VehicleState = sim::VehicleState<f64>;
pub type ControlInput = sim::ControlInput<f64>;
pub type Displacement = sim::Displacement<f64>;
pub type ImuSample = sim::ImuSample<f64>;
pub type TerrainParams = sim::TerrainParams<f64>;
pub type TerrainPatch = sim::TerrainPatch<f64>;
pub type TerrainField = sim::TerrainField<f64>;
pub type SimConfig = sim::SimConfig<f64>;
pub type GlobalPlan = plan::GlobalPlan<f64>;
pub type Track = plan::Track<f64>;
pub type CarrotTarget = plan::CarrotTarget<f64>;
pub type ParameterSet = nn::ParameterSet<f64>;
pub type Gradients = nn::Gradients<f64>;
pub type LossWeights = nn::LossWeights<f64>;






