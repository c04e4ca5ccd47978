use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::spec::{NetworkSpec, MOTION_DIMS, OUTPUT_DIMS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::rng_from_seed;

/// Fully connected layer: `y = W x + b` with `W` of shape (out, in).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

/// Encoder and head layer stacks. Also used for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<T> {
    pub encoder: Vec<Dense<T>>,
    pub head: Vec<Dense<T>>,
}

impl<T: Scalar> Weights<T> {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let stack = |widths: &[usize]| widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Weights {
            encoder: if spec.use_encoder { stack(&spec.encoder_layers) } else { Vec::new() },
            head: stack(&spec.head_layers),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |layers: &[Dense<T>]| layers.iter().map(|l| Dense::zeros(l.inputs(), l.outputs())).collect();
        Weights {
            encoder: z(&self.encoder),
            head: z(&self.head),
        }
    }

    /// Layers in a fixed order: encoder first, then head.
    pub fn layers(&self) -> impl Iterator<Item = &Dense<T>> {
        self.encoder.iter().chain(self.head.iter())
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense<T>> {
        self.encoder.iter_mut().chain(self.head.iter_mut())
    }

    /// Every tensor (weights then bias per layer) as flat slices, in a fixed order.
    pub fn tensors(&self) -> Vec<&[T]> {
        self.layers()
            .flat_map(|l| {
                [
                    l.weights.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        self.layers_mut()
            .flat_map(|l| {
                let Dense { weights, bias } = l;
                [
                    weights.as_slice_mut().expect("standard layout"),
                    bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn scale(&mut self, k: T) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = *v * k);
        }
    }
}

/// Affine standardization statistics, stored with the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization<T> {
    pub motion_mean: [T; MOTION_DIMS],
    pub motion_std: [T; MOTION_DIMS],
    /// Per-dimension window statistics; empty for the ablated network.
    pub window_mean: Vec<T>,
    pub window_std: Vec<T>,
    pub output_mean: [T; OUTPUT_DIMS],
    pub output_std: [T; OUTPUT_DIMS],
}

impl<T: Scalar> Normalization<T> {
    /// Zero mean, unit scale: inputs pass through unchanged.
    pub fn identity(window_dims: usize) -> Self {
        Normalization {
            motion_mean: [T::zero(); MOTION_DIMS],
            motion_std: [T::one(); MOTION_DIMS],
            window_mean: vec![T::zero(); window_dims],
            window_std: vec![T::one(); window_dims],
            output_mean: [T::zero(); OUTPUT_DIMS],
            output_std: [T::one(); OUTPUT_DIMS],
        }
    }

    pub fn all_finite(&self) -> bool {
        self.motion_mean
            .iter()
            .chain(&self.motion_std)
            .chain(&self.window_mean)
            .chain(&self.window_std)
            .chain(&self.output_mean)
            .chain(&self.output_std)
            .all(|v| v.is_finite())
    }
}

/// All network weights plus the metadata needed to use them.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet<T> {
    pub spec: NetworkSpec,
    pub weights: Weights<T>,
    pub normalization: Normalization<T>,
    pub training_seed: u64,
    /// Free-form origin record, e.g. config hash and dataset hash.
    pub provenance: String,
}

impl<T: Scalar> ParameterSet<T> {
    /// All-zero weights with identity normalization.
    pub fn zeros(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        Ok(ParameterSet {
            weights: Weights::zeros(&spec),
            normalization: Normalization::identity(spec.window_dims()),
            spec,
            training_seed: 0,
            provenance: String::new(),
        })
    }

    /// He-scaled Gaussian weights, zero biases.
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(spec)?;
        let mut rng = rng_from_seed(seed);
        for layer in params.weights.layers_mut() {
            let scale = (2.0 / layer.inputs() as f64).sqrt();
            for w in layer.weights.iter_mut() {
                let n: f64 = rng.sample(StandardNormal);
                *w = T::of(n * scale);
            }
        }
        params.training_seed = seed;
        Ok(params)
    }

    pub fn use_encoder(&self) -> bool {
        self.spec.use_encoder
    }

    pub fn is_finite(&self) -> bool {
        self.weights.all_finite() && self.normalization.all_finite()
    }

    /// Check layer shapes against the network spec and that every entry is finite.
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let check = |layers: &[Dense<T>], widths: &[usize], offset: usize| -> Result<()> {
            let expected = widths.len().saturating_sub(1);
            if layers.len() != expected {
                return Err(Error::Shape(format!("expected {expected} layers, found {}", layers.len())));
            }
            for (i, (layer, w)) in layers.iter().zip(widths.windows(2)).enumerate() {
                if layer.inputs() != w[0] || layer.outputs() != w[1] || layer.bias.len() != w[1] {
                    return Err(Error::NetworkFault {
                        layer: offset + i,
                        reason: format!("shape {}x{} does not match spec {}x{}", layer.outputs(), layer.inputs(), w[1], w[0]),
                    });
                }
            }
            Ok(())
        };
        let enc_widths: &[usize] = if self.spec.use_encoder { &self.spec.encoder_layers } else { &[] };
        check(&self.weights.encoder, enc_widths, 0)?;
        check(&self.weights.head, &self.spec.head_layers, self.weights.encoder.len())?;
        if self.normalization.window_mean.len() != self.spec.window_dims()
            || self.normalization.window_std.len() != self.spec.window_dims()
        {
            return Err(Error::Shape("window normalization length does not match spec".into()));
        }
        if !self.is_finite() {
            return Err(Error::ControllerFault("parameters contain non-finite values".into()));
        }
        Ok(())
    }
}
