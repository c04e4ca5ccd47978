//! Forward pass, H-weighted loss and reverse-mode gradients.

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::params::{Dense, ParameterSet, Weights};
use super::spec::{Activation, LossWeights, MOTION_DIMS};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A batch of supervised samples in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples<T> {
    /// Desired motion {v, c}, shape (n, 2).
    pub motion: Array2<T>,
    /// Flattened IMU windows, shape (n, 600); absent for the ablated network.
    pub windows: Option<Array2<T>>,
    /// Commanded controls {v, c} that produced the motion, shape (n, 2).
    pub labels: Array2<T>,
}

impl<T: Scalar> Samples<T> {
    pub fn len(&self) -> usize {
        self.motion.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        Samples {
            motion: self.motion.select(Axis(0), rows),
            windows: self.windows.as_ref().map(|w| w.select(Axis(0), rows)),
            labels: self.labels.select(Axis(0), rows),
        }
    }

    pub fn rows(&self, range: std::ops::Range<usize>) -> Self {
        Samples {
            motion: self.motion.slice(s![range.clone(), ..]).to_owned(),
            windows: self.windows.as_ref().map(|w| w.slice(s![range.clone(), ..]).to_owned()),
            labels: self.labels.slice(s![range, ..]).to_owned(),
        }
    }

    /// Drop the windows, e.g. to train the ablated network on the same data.
    pub fn without_windows(&self) -> Self {
        Samples {
            windows: None,
            ..self.clone()
        }
    }
}

/// Activations of every layer, input first.
struct Trace<T> {
    encoder: Vec<Array2<T>>,
    head: Vec<Array2<T>>,
}

fn dense_forward<T: Scalar>(layer: &Dense<T>, input: &Array2<T>, activation: Option<Activation>, index: usize) -> Result<Array2<T>> {
    let mut out = input.dot(&layer.weights.t());
    out += &layer.bias;
    // checked before the rectifier, which would swallow NaN
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NetworkFault {
            layer: index,
            reason: "non-finite activation".into(),
        });
    }
    if let Some(act) = activation {
        out.mapv_inplace(|v| act.apply(v));
    }
    Ok(out)
}

/// Run a stack; hidden layers use `act`, the last layer is linear.
fn stack_forward<T: Scalar>(layers: &[Dense<T>], input: Array2<T>, act: Activation, offset: usize) -> Result<Vec<Array2<T>>> {
    let mut acts = vec![input];
    for (i, layer) in layers.iter().enumerate() {
        let last = i + 1 == layers.len();
        let next = dense_forward(layer, acts.last().unwrap(), (!last).then_some(act), offset + i)?;
        acts.push(next);
    }
    Ok(acts)
}

/// Accumulate gradients of a stack given the gradient of its (linear) output.
/// Returns the gradient with respect to the stack input.
fn stack_backward<T: Scalar>(
    layers: &[Dense<T>],
    acts: &[Array2<T>],
    grads: &mut [Dense<T>],
    mut upstream: Array2<T>,
    act: Activation,
    offset: usize,
) -> Result<Array2<T>> {
    for i in (0..layers.len()).rev() {
        let input = &acts[i];
        grads[i].weights += &upstream.t().dot(input);
        grads[i].bias += &upstream.sum_axis(Axis(0));
        let mut down = upstream.dot(&layers[i].weights);
        if i > 0 {
            ndarray::Zip::from(&mut down)
                .and(input)
                .for_each(|g, &y| *g = *g * act.derivative_from_output(y));
        }
        if down.iter().any(|v| !v.is_finite()) {
            return Err(Error::NetworkFault {
                layer: offset + i,
                reason: "non-finite gradient".into(),
            });
        }
        upstream = down;
    }
    Ok(upstream)
}

impl<T: Scalar> ParameterSet<T> {
    fn normalized_motion(&self, motion: ArrayView2<T>) -> Array2<T> {
        let n = &self.normalization;
        let mut out = motion.to_owned();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| (v - n.motion_mean[j]) / n.motion_std[j]);
        }
        out
    }

    fn normalized_windows(&self, windows: ArrayView2<T>) -> Array2<T> {
        let mean = ArrayView1::from(&self.normalization.window_mean[..]);
        let std = ArrayView1::from(&self.normalization.window_std[..]);
        (&windows - &mean) / &std
    }

    fn trace(&self, motion: ArrayView2<T>, windows: Option<ArrayView2<T>>) -> Result<(Array2<T>, Trace<T>)> {
        if motion.ncols() != MOTION_DIMS {
            return Err(Error::Shape(format!("motion has {} columns, expected {MOTION_DIMS}", motion.ncols())));
        }
        let act = self.spec.activation;
        let motion_n = self.normalized_motion(motion);
        let (encoder, head_input) = if self.spec.use_encoder {
            let windows = windows.ok_or_else(|| Error::Shape("network expects an observation window".into()))?;
            let dims = self.spec.window_dims();
            if windows.ncols() != dims || windows.nrows() != motion.nrows() {
                return Err(Error::Shape(format!(
                    "window batch is {}x{}, expected {}x{dims}",
                    windows.nrows(),
                    windows.ncols(),
                    motion.nrows()
                )));
            }
            let acts = stack_forward(&self.weights.encoder, self.normalized_windows(windows), act, 0)?;
            let embedding = acts.last().unwrap().clone();
            let input = concatenate(Axis(1), &[motion_n.view(), embedding.view()]).expect("same row count");
            (acts, input)
        } else {
            (Vec::new(), motion_n)
        };
        let head = stack_forward(&self.weights.head, head_input, act, self.weights.encoder.len())?;
        let mut out = head.last().unwrap().clone();
        let n = &self.normalization;
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            col.mapv_inplace(|v| v * n.output_std[j] + n.output_mean[j]);
        }
        Ok((out, Trace { encoder, head }))
    }

    /// Batched prediction in physical units, unclamped.
    pub fn predict(&self, motion: ArrayView2<T>, windows: Option<ArrayView2<T>>) -> Result<Array2<T>> {
        self.trace(motion, windows).map(|(out, _)| out)
    }

    /// Commanded {v, c} for desired motion `(v_r, c_r)` and, for the full
    /// network, an observation window. Output is in physical units, unclamped.
    pub fn forward(&self, v_r: T, c_r: T, window: Option<&[T]>) -> Result<[T; 2]> {
        let motion = Array2::from_shape_vec((1, 2), vec![v_r, c_r]).expect("1x2");
        let windows = match (self.spec.use_encoder, window) {
            (true, Some(w)) => Some(ArrayView2::from_shape((1, w.len()), w).expect("row")),
            (true, None) => return Err(Error::Shape("network expects an observation window".into())),
            (false, _) => None,
        };
        let out = self.predict(motion.view(), windows)?;
        Ok([out[[0, 0]], out[[0, 1]]])
    }

    /// Mean over the batch of `(u - f(.))^T H (u - f(.))`.
    pub fn loss(&self, batch: &Samples<T>, h: &LossWeights<T>) -> Result<T> {
        let pred = self.predict(batch.motion.view(), batch.windows.as_ref().map(|w| w.view()))?;
        Ok(mean_quadratic(&pred, &batch.labels, h))
    }

    /// Loss and its gradient with respect to every weight.
    pub fn backward(&self, batch: &Samples<T>, h: &LossWeights<T>) -> Result<(T, Weights<T>)> {
        let n = batch.len();
        if n == 0 {
            return Err(Error::Data("empty batch".into()));
        }
        let (pred, trace) = self.trace(batch.motion.view(), batch.windows.as_ref().map(|w| w.view()))?;
        let loss = mean_quadratic(&pred, &batch.labels, h);
        // d/dpred of mean (u - p)^T H (u - p) is -2/n H (u - p); chain through de-normalization
        let scale = T::of(-2.0 / n as f64);
        let std = self.normalization.output_std;
        let mut upstream = Array2::zeros((n, 2));
        for i in 0..n {
            let e = [batch.labels[[i, 0]] - pred[[i, 0]], batch.labels[[i, 1]] - pred[[i, 1]]];
            let he = h.apply(e);
            upstream[[i, 0]] = scale * he[0] * std[0];
            upstream[[i, 1]] = scale * he[1] * std[1];
        }
        let act = self.spec.activation;
        let mut grads = self.weights.zeros_like();
        let enc_layers = self.weights.encoder.len();
        let head_in = stack_backward(&self.weights.head, &trace.head, &mut grads.head, upstream, act, enc_layers)?;
        if self.spec.use_encoder {
            let embedding_grad = head_in.slice(s![.., MOTION_DIMS..]).to_owned();
            stack_backward(&self.weights.encoder, &trace.encoder, &mut grads.encoder, embedding_grad, act, 0)?;
        }
        Ok((loss, grads))
    }
}

fn mean_quadratic<T: Scalar>(pred: &Array2<T>, labels: &Array2<T>, h: &LossWeights<T>) -> T {
    let n = pred.nrows();
    if n == 0 {
        return T::zero();
    }
    let total = pred
        .outer_iter()
        .zip(labels.outer_iter())
        .map(|(p, u)| h.quadratic([u[0] - p[0], u[1] - p[1]]))
        .fold(T::zero(), |a, b| a + b);
    total / T::of(n as f64)
}

/// Per-row predictions as a vector of pairs.
pub fn rows_of<T: Scalar>(a: &Array2<T>) -> Vec<[T; 2]> {
    a.outer_iter().map(|r: ArrayView1<T>| [r[0], r[1]]).collect()
}

pub(crate) fn column_stats<T: Scalar>(a: ArrayView2<T>) -> (Array1<T>, Array1<T>) {
    let n = T::of(a.nrows().max(1) as f64);
    let mean = a.sum_axis(Axis(0)) / n;
    let var = a
        .outer_iter()
        .fold(Array1::zeros(a.ncols()), |acc: Array1<T>, row| {
            let d = &row - &mean;
            acc + &d.mapv(|v| v * v)
        })
        / n;
    let floor = T::of(1e-6);
    let std = var.mapv(|v| v.sqrt().max(floor));
    (mean, std)
}
