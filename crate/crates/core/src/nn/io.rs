//! Versioned binary parameter files and loss-curve export.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::params::{Dense, Normalization, ParameterSet, Weights};
use super::spec::{Activation, NetworkSpec};
use super::train::EpochLoss;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const PARAM_MAGIC: &[u8; 8] = b"IKDPARAM";
pub const PARAM_VERSION: u32 = 1;

/// Encode as: magic, version, scalar width, spec hash, seed, provenance, spec, normalization,
/// then every tensor in layer order, all little-endian.
pub fn encode_params<T: Scalar>(params: &ParameterSet<T>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(PARAM_MAGIC);
    out.extend_from_slice(&PARAM_VERSION.to_le_bytes());
    out.push(T::BYTES as u8);
    out.extend_from_slice(&params.spec.hash().to_le_bytes());
    out.extend_from_slice(&params.training_seed.to_le_bytes());
    out.extend_from_slice(&(params.provenance.len() as u32).to_le_bytes());
    out.extend_from_slice(params.provenance.as_bytes());
    let spec = &params.spec;
    out.push(spec.use_encoder as u8);
    out.push(spec.activation.code());
    for widths in [&spec.encoder_layers, &spec.head_layers] {
        out.extend_from_slice(&(widths.len() as u32).to_le_bytes());
        for &w in widths.iter() {
            out.extend_from_slice(&(w as u32).to_le_bytes());
        }
    }
    let n = &params.normalization;
    let fixed = n.motion_mean.iter().chain(&n.motion_std).chain(&n.output_mean).chain(&n.output_std);
    for &v in fixed.chain(&n.window_mean).chain(&n.window_std) {
        v.write_le(&mut out);
    }
    for t in params.weights.tensors() {
        for &v in t {
            v.write_le(&mut out);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format {
                what: "parameter file",
                reason: "unexpected end of data".into(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn scalar<T: Scalar>(&mut self) -> Result<T> {
        Ok(T::read_le(self.take(T::BYTES)?))
    }

    fn scalars<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>> {
        (0..n).map(|_| self.scalar()).collect()
    }
}

fn fault(reason: impl Into<String>) -> Error {
    Error::Format {
        what: "parameter file",
        reason: reason.into(),
    }
}

pub fn decode_params<T: Scalar>(bytes: &[u8]) -> Result<ParameterSet<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != PARAM_MAGIC {
        return Err(fault("bad magic bytes"));
    }
    let version = r.u32()?;
    if version != PARAM_VERSION {
        return Err(fault(format!("unsupported version {version}")));
    }
    let width = r.u8()? as usize;
    if width != T::BYTES {
        return Err(fault(format!("file stores {width}-byte floats, expected {}", T::BYTES)));
    }
    let hash = r.u64()?;
    let training_seed = r.u64()?;
    let prov_len = r.u32()? as usize;
    let provenance = std::str::from_utf8(r.take(prov_len)?)
        .map_err(|_| fault("provenance is not UTF-8"))?
        .to_string();
    let use_encoder = r.u8()? != 0;
    let activation = Activation::from_code(r.u8()?).ok_or_else(|| fault("unknown activation"))?;
    let mut widths = Vec::new();
    for _ in 0..2 {
        let n = r.u32()? as usize;
        if n > 64 {
            return Err(fault("implausible layer count"));
        }
        widths.push((0..n).map(|_| r.u32().map(|w| w as usize)).collect::<Result<Vec<_>>>()?);
    }
    let spec = NetworkSpec {
        encoder_layers: widths[0].clone(),
        head_layers: widths[1].clone(),
        activation,
        use_encoder,
    };
    spec.validate().map_err(|e| fault(e.to_string()))?;
    if spec.hash() != hash {
        return Err(fault("spec hash does not match the stored architecture"));
    }
    let fixed: Vec<T> = r.scalars(8)?;
    let wd = spec.window_dims();
    let normalization = Normalization {
        motion_mean: [fixed[0], fixed[1]],
        motion_std: [fixed[2], fixed[3]],
        output_mean: [fixed[4], fixed[5]],
        output_std: [fixed[6], fixed[7]],
        window_mean: r.scalars(wd)?,
        window_std: r.scalars(wd)?,
    };
    let mut weights = Weights::<T>::zeros(&spec);
    let read_layer = |r: &mut Reader, layer: &mut Dense<T>| -> Result<()> {
        let (o, i) = (layer.outputs(), layer.inputs());
        layer.weights = Array2::from_shape_vec((o, i), r.scalars(o * i)?).expect("shape");
        layer.bias = Array1::from(r.scalars::<T>(o)?);
        Ok(())
    };
    for layer in weights.layers_mut() {
        read_layer(&mut r, layer)?;
    }
    if r.pos != bytes.len() {
        return Err(fault("trailing bytes"));
    }
    let params = ParameterSet {
        spec,
        weights,
        normalization,
        training_seed,
        provenance,
    };
    Ok(params)
}

pub fn save_params<T: Scalar>(params: &ParameterSet<T>, path: &Path) -> Result<()> {
    std::fs::write(path, encode_params(params)).map_err(|e| Error::io(path, e))
}

pub fn load_params<T: Scalar>(path: &Path) -> Result<ParameterSet<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_params(&bytes)
}

pub const LOSS_CURVE_HEADER: &str = "epoch,train_loss,val_loss";

pub fn write_loss_curve<W: Write>(out: &mut W, curve: &[EpochLoss]) -> std::io::Result<()> {
    writeln!(out, "{LOSS_CURVE_HEADER}")?;
    for row in curve {
        writeln!(out, "{},{},{}", row.epoch, row.train_loss, row.val_loss)?;
    }
    Ok(())
}
