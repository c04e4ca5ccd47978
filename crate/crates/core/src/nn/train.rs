//! Mini-batch training with adaptive moment estimates.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::network::{column_stats, Samples};
use super::params::{Normalization, ParameterSet, Weights};
use super::spec::{LossWeights, NetworkSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub validation_fraction: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 64,
            epochs: 50,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            validation_fraction: 0.1,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be > 0".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 0.5) {
            return Err(Error::Config("validation_fraction must lie in (0, 0.5)".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("moment decay rates must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    /// NaN when there is no validation data.
    pub val_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Parameters from the epoch with the lowest validation loss.
    pub params: ParameterSet<T>,
    /// Row 0 holds the losses of the initialization.
    pub curve: Vec<EpochLoss>,
    pub best_epoch: usize,
}

impl<T> TrainOutcome<T> {
    pub fn initial(&self) -> &EpochLoss {
        &self.curve[0]
    }

    pub fn best(&self) -> &EpochLoss {
        &self.curve[self.best_epoch]
    }
}

/// Standardization statistics of a training set.
pub fn fit_normalization<T: Scalar>(data: &Samples<T>, spec: &NetworkSpec) -> Normalization<T> {
    let (m_mean, m_std) = column_stats(data.motion.view());
    let (o_mean, o_std) = column_stats(data.labels.view());
    let (w_mean, w_std) = match (&data.windows, spec.use_encoder) {
        (Some(w), true) => {
            let (mean, std) = column_stats(w.view());
            (mean.to_vec(), std.to_vec())
        }
        _ => (vec![T::zero(); spec.window_dims()], vec![T::one(); spec.window_dims()]),
    };
    Normalization {
        motion_mean: [m_mean[0], m_mean[1]],
        motion_std: [m_std[0], m_std[1]],
        window_mean: w_mean,
        window_std: w_std,
        output_mean: [o_mean[0], o_mean[1]],
        output_std: [o_std[0], o_std[1]],
    }
}

struct Adam<T> {
    first: Weights<T>,
    second: Weights<T>,
    step: i32,
}

impl<T: Scalar> Adam<T> {
    fn new(like: &Weights<T>) -> Self {
        Adam {
            first: like.zeros_like(),
            second: like.zeros_like(),
            step: 0,
        }
    }

    fn update(&mut self, params: &mut Weights<T>, grads: &Weights<T>, cfg: &TrainConfig) {
        self.step += 1;
        let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
        let correction1 = T::one() - b1.powi(self.step);
        let correction2 = T::one() - b2.powi(self.step);
        let lr = T::of(cfg.learning_rate);
        let eps = T::of(cfg.epsilon);
        let mut p_t = params.tensors_mut();
        let g_t = grads.tensors();
        let mut m_t = self.first.tensors_mut();
        let mut v_t = self.second.tensors_mut();
        for k in 0..p_t.len() {
            for i in 0..p_t[k].len() {
                let g = g_t[k][i];
                let m = b1 * m_t[k][i] + (T::one() - b1) * g;
                let v = b2 * v_t[k][i] + (T::one() - b2) * g * g;
                m_t[k][i] = m;
                v_t[k][i] = v;
                p_t[k][i] = p_t[k][i] - lr * (m / correction1) / ((v / correction2).sqrt() + eps);
            }
        }
    }
}

fn full_loss<T: Scalar>(params: &ParameterSet<T>, data: &Samples<T>, h: &LossWeights<T>) -> Result<f64> {
    if data.is_empty() {
        return Ok(f64::NAN);
    }
    // chunked to bound activation memory; weighted by chunk size
    let chunk = 2048;
    let mut total = 0.0;
    let mut start = 0;
    while start < data.len() {
        let end = (start + chunk).min(data.len());
        let part = data.rows(start..end);
        total += params.loss(&part, h)?.f64() * (end - start) as f64;
        start = end;
    }
    Ok(total / data.len() as f64)
}

/// Train from a fresh initialization seeded by `cfg.rng_seed`.
pub fn train<T: Scalar>(
    train_set: &Samples<T>,
    validation: &Samples<T>,
    spec: &NetworkSpec,
    h: &LossWeights<T>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>> {
    spec.validate()?;
    if train_set.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    if spec.use_encoder && train_set.windows.is_none() {
        return Err(Error::Data("full network needs observation windows".into()));
    }
    let train_set = if spec.use_encoder { train_set.clone() } else { train_set.without_windows() };
    let validation = if spec.use_encoder { validation.clone() } else { validation.without_windows() };

    let mut params = ParameterSet::init(spec.clone(), cfg.rng_seed)?;
    params.normalization = fit_normalization(&train_set, spec);

    let mut curve = vec![EpochLoss {
        epoch: 0,
        train_loss: full_loss(&params, &train_set, h)?,
        val_loss: full_loss(&params, &validation, h)?,
    }];
    let score = |e: &EpochLoss| if validation.is_empty() { e.train_loss } else { e.val_loss };
    let mut best = params.clone();
    let mut best_epoch = 0;
    let mut best_score = score(&curve[0]);

    let mut rng = rng_from_seed(cfg.rng_seed ^ 0x5eed_5eed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut adam = Adam::new(&params.weights);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch_rows in order.chunks(cfg.batch_size) {
            let batch = train_set.select(batch_rows);
            let (loss, grads) = params.backward(&batch, h).map_err(|e| match e {
                Error::NetworkFault { .. } => Error::Diverged { epoch, loss: f64::NAN },
                other => other,
            })?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, loss: loss.f64() });
            }
            adam.update(&mut params.weights, &grads, cfg);
        }
        let row = EpochLoss {
            epoch,
            train_loss: full_loss(&params, &train_set, h).map_err(|_| Error::Diverged { epoch, loss: f64::NAN })?,
            val_loss: full_loss(&params, &validation, h).map_err(|_| Error::Diverged { epoch, loss: f64::NAN })?,
        };
        if !row.train_loss.is_finite() {
            return Err(Error::Diverged { epoch, loss: row.train_loss });
        }
        log::debug!("epoch {epoch}: train {:.6} val {:.6}", row.train_loss, row.val_loss);
        if score(&row) < best_score {
            best_score = score(&row);
            best = params.clone();
            best_epoch = epoch;
        }
        curve.push(row);
    }
    Ok(TrainOutcome {
        params: best,
        curve,
        best_epoch,
    })
}
