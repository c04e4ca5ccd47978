//! Minimal feed-forward network: IMU encoder, inverse-model head, H-weighted
//! loss, reverse-mode gradients, adaptive-moment training and parameter files.

mod gradcheck;
mod io;
mod network;
mod params;
mod spec;
mod train;

pub use gradcheck::{compare_gradients, grad_check, random_problem, relative_error, GradCheckReport, DEFAULT_DRAWS, FD_STEP};
pub use io::{decode_params, encode_params, load_params, save_params, write_loss_curve, LOSS_CURVE_HEADER, PARAM_MAGIC, PARAM_VERSION};
pub use network::{rows_of, Samples};
pub use params::{Dense, Normalization, ParameterSet, Weights};
pub use spec::{Activation, LossWeights, NetworkSpec, MOTION_DIMS, OUTPUT_DIMS};
pub use train::{fit_normalization, train, EpochLoss, TrainConfig, TrainOutcome};

/// Gradients share the weight layout.
pub type Gradients<T> = Weights<T>;
