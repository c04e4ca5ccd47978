use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sim::WINDOW_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output `y`.
    pub fn derivative_from_output<T: Scalar>(self, y: T) -> T {
        match self {
            Activation::Relu => {
                if y > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => T::one() - y * y,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Tanh => 1,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }
}

/// Layer widths of the IMU encoder and the inverse-model head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub encoder_layers: Vec<usize>,
    pub head_layers: Vec<usize>,
    pub activation: Activation,
    pub use_encoder: bool,
}

/// Width of the desired-motion input {v, c}.
pub const MOTION_DIMS: usize = 2;
pub const OUTPUT_DIMS: usize = 2;

impl NetworkSpec {
    /// IMU encoder 600-256-256-2 feeding a 4-32-32-2 head.
    pub fn full() -> Self {
        NetworkSpec {
            encoder_layers: vec![WINDOW_LEN, 256, 256, 2],
            head_layers: vec![4, 32, 32, OUTPUT_DIMS],
            activation: Activation::Relu,
            use_encoder: true,
        }
    }

    /// Head only, fed with {v, c}.
    pub fn ablated() -> Self {
        NetworkSpec {
            encoder_layers: Vec::new(),
            head_layers: vec![MOTION_DIMS, 32, 32, OUTPUT_DIMS],
            activation: Activation::Relu,
            use_encoder: false,
        }
    }

    pub fn embedding_dims(&self) -> usize {
        if self.use_encoder {
            *self.encoder_layers.last().unwrap_or(&0)
        } else {
            0
        }
    }

    pub fn window_dims(&self) -> usize {
        if self.use_encoder {
            self.encoder_layers[0]
        } else {
            0
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.head_layers.len() < 2 || *self.head_layers.last().unwrap() != OUTPUT_DIMS {
            return Err(Error::Config(format!("head must end in {OUTPUT_DIMS} outputs")));
        }
        if self.head_layers.iter().chain(&self.encoder_layers).any(|&w| w == 0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if self.use_encoder {
            if self.encoder_layers.len() < 2 {
                return Err(Error::Config("encoder needs at least an input and output width".into()));
            }
            if self.head_layers[0] != MOTION_DIMS + self.embedding_dims() {
                return Err(Error::Config(format!(
                    "head input {} must equal {} motion dims + {} embedding dims",
                    self.head_layers[0],
                    MOTION_DIMS,
                    self.embedding_dims()
                )));
            }
        } else if self.head_layers[0] != MOTION_DIMS {
            return Err(Error::Config(format!("ablated head input must be {MOTION_DIMS}")));
        }
        Ok(())
    }

    /// Short stable fingerprint of the architecture.
    pub fn hash(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    fn canonical(&self) -> String {
        format!(
            "enc={:?};head={:?};act={};enc_on={}",
            self.encoder_layers,
            self.head_layers,
            self.activation.code(),
            self.use_encoder
        )
    }
}

/// Positive definite weighting of the 2-D control error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct LossWeights<T> {
    h: [[T; 2]; 2],
}

impl<T: Scalar> LossWeights<T> {
    pub fn new(h: [[T; 2]; 2]) -> Result<Self> {
        if h.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("H must be finite".into()));
        }
        if h[0][1] != h[1][0] {
            return Err(Error::Config("H must be symmetric".into()));
        }
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if !(h[0][0] > T::zero() && det > T::zero()) {
            return Err(Error::Config("H must be positive definite".into()));
        }
        Ok(LossWeights { h })
    }

    pub fn diag(a: T, b: T) -> Result<Self> {
        Self::new([[a, T::zero()], [T::zero(), b]])
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one()).expect("identity is positive definite")
    }

    pub fn matrix(&self) -> [[T; 2]; 2] {
        self.h
    }

    pub fn scaled(&self, k: T) -> Result<Self> {
        Self::new([[self.h[0][0] * k, self.h[0][1] * k], [self.h[1][0] * k, self.h[1][1] * k]])
    }

    /// e^T H e
    pub fn quadratic(&self, e: [T; 2]) -> T {
        let h = &self.h;
        e[0] * (h[0][0] * e[0] + h[0][1] * e[1]) + e[1] * (h[1][0] * e[0] + h[1][1] * e[1])
    }

    /// H e
    pub fn apply(&self, e: [T; 2]) -> [T; 2] {
        let h = &self.h;
        [h[0][0] * e[0] + h[0][1] * e[1], h[1][0] * e[0] + h[1][1] * e[1]]
    }
}

impl<T: Scalar> Default for LossWeights<T> {
    /// Curvature errors weigh four times velocity errors.
    fn default() -> Self {
        Self::diag(T::one(), T::of(4.0)).expect("diag(1, 4) is positive definite")
    }
}
