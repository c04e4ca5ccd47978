use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Samples;
use crate::scalar::Scalar;
use crate::sim::{WINDOW_LEN, WINDOW_SAMPLES};

pub const DATASET_MAGIC: &[u8; 8] = b"IKDDATA\0";
pub const DATASET_VERSION: u32 = 1;
/// Stored 32-bit values per sample: four labels then the window.
pub const VALUES_PER_SAMPLE: usize = 4 + WINDOW_LEN;

/// One labelled control step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    /// Mean wheel-odometry speed over the label horizon.
    pub v_r: f32,
    /// Mean gyro-z over the label horizon divided by `v_r`.
    pub c_r: f32,
    pub v_cmd: f32,
    pub c_cmd: f32,
    /// Channel-major IMU window strictly preceding `time`.
    pub window: Vec<f32>,
    /// Command time, seconds.
    pub time: f64,
}

impl TrainingSample {
    pub fn is_finite(&self) -> bool {
        [self.v_r, self.c_r, self.v_cmd, self.c_cmd].iter().all(|v| v.is_finite())
            && self.window.iter().all(|v| v.is_finite())
            && self.time.is_finite()
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub terrain_hash: String,
    pub sim_seed: u64,
    pub policy_seed: u64,
    pub duration: f64,
    pub control_dt: f64,
    pub label_horizon: f64,
    pub v_min_label: f64,
    /// Seconds of IMU history in each window.
    pub window_span: f64,
    pub window_layout: String,
    #[serde(default)]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub samples: Vec<TrainingSample>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.samples.iter().enumerate() {
            if s.window.len() != WINDOW_LEN {
                return Err(Error::Data(format!("sample {i}: window has {} values, expected {WINDOW_LEN}", s.window.len())));
            }
            if !s.is_finite() {
                return Err(Error::Data(format!("sample {i} is not finite")));
            }
            if f64::from(s.v_r) < self.provenance.v_min_label {
                return Err(Error::Data(format!("sample {i}: v_r below v_min_label")));
            }
        }
        Ok(())
    }

    /// Concatenate runs collected independently; provenance of the first is kept
    /// with the durations summed.
    pub fn concat(parts: Vec<Dataset>) -> Dataset {
        let mut iter = parts.into_iter();
        let Some(mut out) = iter.next() else {
            return Dataset::default();
        };
        for part in iter {
            out.provenance.duration += part.provenance.duration;
            out.samples.extend(part.samples);
        }
        out
    }

    /// Network inputs are the realized motion, targets the issued commands.
    pub fn to_samples<T: Scalar>(&self) -> Samples<T> {
        let n = self.len();
        let mut motion = Array2::zeros((n, 2));
        let mut labels = Array2::zeros((n, 2));
        let mut windows = Array2::zeros((n, WINDOW_LEN));
        for (i, s) in self.samples.iter().enumerate() {
            motion[[i, 0]] = T::of(s.v_r.into());
            motion[[i, 1]] = T::of(s.c_r.into());
            labels[[i, 0]] = T::of(s.v_cmd.into());
            labels[[i, 1]] = T::of(s.c_cmd.into());
            for (j, w) in s.window.iter().enumerate() {
                windows[[i, j]] = T::of((*w).into());
            }
        }
        Samples {
            motion,
            windows: Some(windows),
            labels,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let prov = serde_json::to_vec(&self.provenance).expect("provenance serializes");
        let mut out = Vec::with_capacity(24 + self.len() * (VALUES_PER_SAMPLE * 4 + 8) + prov.len());
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for s in &self.samples {
            for v in [s.v_r, s.c_r, s.v_cmd, s.c_cmd].iter().chain(&s.window) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        for s in &self.samples {
            out.extend_from_slice(&s.time.to_le_bytes());
        }
        out.extend_from_slice(&(prov.len() as u64).to_le_bytes());
        out.extend_from_slice(&prov);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Dataset> {
        let fault = |reason: &str| Error::Format { what: "dataset", reason: reason.to_string() };
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8).ok_or_else(|| fault("truncated header"))? != DATASET_MAGIC {
            return Err(fault("bad magic bytes"));
        }
        let version = u32::from_le_bytes(r.array().ok_or_else(|| fault("truncated header"))?);
        if version != DATASET_VERSION {
            return Err(fault(&format!("unsupported version {version}")));
        }
        let n = u64::from_le_bytes(r.array().ok_or_else(|| fault("truncated header"))?) as usize;
        if n.checked_mul(VALUES_PER_SAMPLE * 4 + 8).is_none_or(|b| b > bytes.len()) {
            return Err(fault("sample count exceeds file size"));
        }
        let mut samples = Vec::with_capacity(n);
        for _ in 0..n {
            let mut vals = Vec::with_capacity(VALUES_PER_SAMPLE);
            for _ in 0..VALUES_PER_SAMPLE {
                vals.push(f32::from_le_bytes(r.array().ok_or_else(|| fault("truncated samples"))?));
            }
            samples.push(TrainingSample {
                v_r: vals[0],
                c_r: vals[1],
                v_cmd: vals[2],
                c_cmd: vals[3],
                window: vals.split_off(4),
                time: 0.0,
            });
        }
        for s in samples.iter_mut() {
            s.time = f64::from_le_bytes(r.array().ok_or_else(|| fault("truncated times"))?);
        }
        let len = u64::from_le_bytes(r.array().ok_or_else(|| fault("missing provenance"))?) as usize;
        let prov = r.take(len).ok_or_else(|| fault("truncated provenance"))?;
        let provenance = serde_json::from_slice(prov).map_err(|e| fault(&format!("provenance: {e}")))?;
        if r.pos != bytes.len() {
            return Err(fault("trailing bytes"));
        }
        Ok(Dataset { samples, provenance })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Dataset::decode(&bytes)
    }

    /// One header row then one row per sample.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", csv_header())?;
        for s in &self.samples {
            write!(out, "{},{},{},{},{}", s.time, s.v_r, s.c_r, s.v_cmd, s.c_cmd)?;
            for w in &s.window {
                write!(out, ",{w}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// `time,v_r,c_r,v_cmd,c_cmd,accel_x_0..accel_x_99,...,gyro_z_99`
pub fn csv_header() -> String {
    let mut h = String::from("time,v_r,c_r,v_cmd,c_cmd");
    for ch in ["accel_x", "accel_y", "accel_z", "gyro_x", "gyro_y", "gyro_z"] {
        for i in 0..WINDOW_SAMPLES {
            h.push_str(&format!(",{ch}_{i}"));
        }
    }
    h
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn array<const N: usize>(&mut self) -> Option<[u8; N]> {
        self.take(N).map(|b| b.try_into().expect("length checked"))
    }
}

/// Contiguous validation block of `round(fraction * N)` samples whose start is
/// drawn from `seed`. Training samples whose window or label interval overlaps
/// any validation sample's are dropped so no IMU reading is shared.
pub fn split(dataset: &Dataset, validation_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&validation_fraction) {
        return Err(Error::Config("validation_fraction must lie in [0, 1)".into()));
    }
    let n = dataset.len();
    let n_val = (validation_fraction * n as f64).round() as usize;
    let sub = |samples: Vec<TrainingSample>| Dataset {
        samples,
        provenance: dataset.provenance.clone(),
    };
    if n_val == 0 {
        return Ok((dataset.clone(), sub(Vec::new())));
    }
    use rand::Rng;
    let mut rng = crate::sim::rng_from_seed(seed);
    let start = rng.random_range(0..=n - n_val);
    let block = start..start + n_val;
    let span = dataset.provenance.window_span.max(0.0);
    let horizon = dataset.provenance.label_horizon.max(0.0);
    let lo = dataset.samples[block.start].time - span;
    let hi = dataset.samples[block.end - 1].time + horizon;
    let train = dataset
        .samples
        .iter()
        .enumerate()
        .filter(|(i, s)| !block.contains(i) && (s.time + horizon <= lo || s.time - span >= hi))
        .map(|(_, s)| s.clone())
        .collect();
    Ok((sub(train), sub(dataset.samples[block].to_vec())))
}

/// Histogram of `values` over `[lo, hi]` with `bins` equal bins; values outside are ignored.
pub fn histogram(values: impl Iterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0; bins];
    if bins == 0 || !(hi > lo) {
        return counts;
    }
    for v in values {
        if v >= lo && v <= hi {
            let k = (((v - lo) / (hi - lo)) * bins as f64).floor() as usize;
            counts[k.min(bins - 1)] += 1;
        }
    }
    counts
}

/// Fraction of `[lo, hi]` spanned by the observed values.
pub fn range_coverage(values: impl Iterator<Item = f64>, lo: f64, hi: f64) -> f64 {
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !(max >= min) || !(hi > lo) {
        return 0.0;
    }
    ((max.min(hi) - min.max(lo)) / (hi - lo)).max(0.0)
}
