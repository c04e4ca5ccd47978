use crate::error::{Error, Result};
use crate::nn::ParameterSet;
use crate::scalar::Scalar;
use crate::sim::ControlInput;

fn corrected<T: Scalar>(params: &ParameterSet<T>, desired: ControlInput<T>, window: Option<&[T]>) -> Result<ControlInput<T>> {
    let out = params
        .forward(desired.velocity, desired.curvature, window)
        .map_err(|e| Error::ControllerFault(e.to_string()))?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::ControllerFault("network produced a non-finite command".into()));
    }
    Ok(ControlInput::new(out[0], out[1]))
}

/// Full inverse model: the baseline command stands in for the desired motion,
/// the window supplies the terrain context.
pub fn learned_select<T: Scalar>(desired: ControlInput<T>, window: &[T], params: &ParameterSet<T>) -> Result<ControlInput<T>> {
    if !params.use_encoder() {
        return Err(Error::ControllerFault("learned controller needs a network with an encoder".into()));
    }
    corrected(params, desired, Some(window))
}

/// Inverse model without observations.
pub fn ablated_select<T: Scalar>(desired: ControlInput<T>, params: &ParameterSet<T>) -> Result<ControlInput<T>> {
    if params.use_encoder() {
        return Err(Error::ControllerFault("ablated controller needs a network without an encoder".into()));
    }
    corrected(params, desired, None)
}
