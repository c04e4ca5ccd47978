//! Finite-difference verification of the analytic gradients.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

use super::network::Samples;
use super::params::{ParameterSet, Weights};
use super::spec::{LossWeights, NetworkSpec};
use crate::error::Result;
use crate::sim::rng_from_seed;

pub const FD_STEP: f64 = 1e-6;
pub const DEFAULT_DRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub draws: usize,
}

/// `|a - n| / max(|a| + |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Random parameters and a random batch, both derived from `seed`.
pub fn random_problem(spec: &NetworkSpec, seed: u64, batch: usize) -> Result<(ParameterSet<f64>, Samples<f64>)> {
    let mut params = ParameterSet::init(spec.clone(), seed)?;
    let mut rng = rng_from_seed(seed.wrapping_add(1));
    for t in params.weights.tensors_mut() {
        for v in t.iter_mut() {
            if *v == 0.0 {
                *v = 0.1 * rng.sample::<f64, _>(StandardNormal);
            }
        }
    }
    let motion = Array2::from_shape_fn((batch, 2), |(_, j)| {
        if j == 0 { rng.random_range(0.0..3.0) } else { rng.random_range(-1.35..1.35) }
    });
    let windows = spec
        .use_encoder
        .then(|| Array2::from_shape_fn((batch, spec.window_dims()), |_| rng.sample::<f64, _>(StandardNormal)));
    let labels = Array2::from_shape_fn((batch, 2), |(_, j)| {
        if j == 0 { rng.random_range(0.0..3.0) } else { rng.random_range(-1.35..1.35) }
    });
    Ok((params, Samples { motion, windows, labels }))
}

/// Compare `analytic` against central differences at `draws` parameter entries
/// chosen round-robin across tensors so every layer is exercised.
pub fn compare_gradients(
    params: &ParameterSet<f64>,
    batch: &Samples<f64>,
    h: &LossWeights<f64>,
    analytic: &Weights<f64>,
    draws: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let mut probe = params.clone();
    let sizes: Vec<usize> = params.weights.tensors().iter().map(|t| t.len()).collect();
    let grads = analytic.tensors();
    let mut rng = rng_from_seed(seed.wrapping_add(2));
    let mut worst: f64 = 0.0;
    for k in 0..draws {
        let tensor = k % sizes.len();
        let index = rng.random_range(0..sizes[tensor]);
        let original = probe.weights.tensors()[tensor][index];
        probe.weights.tensors_mut()[tensor][index] = original + FD_STEP;
        let plus = probe.loss(batch, h)?;
        probe.weights.tensors_mut()[tensor][index] = original - FD_STEP;
        let minus = probe.loss(batch, h)?;
        probe.weights.tensors_mut()[tensor][index] = original;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(grads[tensor][index], numeric));
    }
    Ok(GradCheckReport {
        max_relative_error: worst,
        draws,
    })
}

/// Standing gradient check on fresh random parameters.
pub fn grad_check(spec: &NetworkSpec, seed: u64) -> Result<GradCheckReport> {
    let (params, batch) = random_problem(spec, seed, 8)?;
    let h = LossWeights::default();
    let (_, analytic) = params.backward(&batch, &h)?;
    compare_gradients(&params, &batch, &h, &analytic, DEFAULT_DRAWS, seed)
}
