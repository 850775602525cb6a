//! On-disk tensors: one JSON header line, then little-endian `f64` pairs in
//! `(l, r, n)` row-major order.

use std::io::{BufRead, BufReader, Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::acquisition::observable::{ObservableTensor, Pairing};
use crate::acquisition::signal::{SignalMode, SignalTensor};
use crate::acquisition::times::TimeSamples;
use crate::error::{QfamesError, Result};
use crate::scalar::{Real, C};

const FORMAT: &str = "qfames-tensor";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorHeader {
    pub format: String,
    pub version: u32,
    /// `"signal"` or `"observable"`.
    pub kind: String,
    pub shape: [usize; 3],
    /// `"exact"` or `"shot"`.
    pub mode: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots_per_entry: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shot_seed: Option<u64>,
    #[serde(rename = "T")]
    pub width: f64,
    pub sigma: f64,
    pub seed: u64,
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times_prime: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_times_prime: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairing: Option<Pairing>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitary: Option<bool>,
}

fn fmt_err(msg: impl Into<String>) -> QfamesError {
    QfamesError::Format(msg.into())
}

fn mode_fields(mode: SignalMode) -> (String, Option<usize>, Option<u64>) {
    match mode {
        SignalMode::Exact => ("exact".into(), None, None),
        SignalMode::Shot { shots_per_entry, seed } => ("shot".into(), Some(shots_per_entry), Some(seed)),
    }
}

fn parse_mode(h: &TensorHeader) -> Result<SignalMode> {
    match h.mode.as_str() {
        "exact" => Ok(SignalMode::Exact),
        "shot" => Ok(SignalMode::Shot {
            shots_per_entry: h.shots_per_entry.ok_or_else(|| fmt_err("shot tensor without shots_per_entry"))?,
            seed: h.shot_seed.unwrap_or(0),
        }),
        other => Err(fmt_err(format!("unknown mode {other:?}"))),
    }
}

fn to_f64s<T: Real>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.f64()).collect()
}

fn write_body<T: Real, W: Write>(w: &mut W, header: &TensorHeader, data: &[C<T>]) -> Result<()> {
    let line = serde_json::to_string(header).map_err(|e| fmt_err(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(data.len() * 16);
    for z in data {
        buf.extend_from_slice(&z.re.f64().to_le_bytes());
        buf.extend_from_slice(&z.im.f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_body<T: Real, R: Read>(r: R) -> Result<(TensorHeader, Vec<C<T>>)> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: TensorHeader = serde_json::from_str(line.trim_end()).map_err(|e| fmt_err(e.to_string()))?;
    if header.format != FORMAT {
        return Err(fmt_err(format!("not a {FORMAT} file")));
    }
    if header.version != VERSION {
        return Err(fmt_err(format!("unsupported version {}", header.version)));
    }
    let [l, r, n] = header.shape;
    if header.times.len() != n {
        return Err(fmt_err("time count does not match shape"));
    }
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != l * r * n * 16 {
        return Err(fmt_err(format!(
            "data block has {} bytes, shape {:?} needs {}",
            bytes.len(),
            header.shape,
            l * r * n * 16
        )));
    }
    let data = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C::new(T::lit(re), T::lit(im))
        })
        .collect();
    Ok((header, data))
}

pub fn write_signal<T: Real, W: Write>(w: &mut W, tensor: &SignalTensor<T>) -> Result<()> {
    let (mode, shots_per_entry, shot_seed) = mode_fields(tensor.mode);
    let header = TensorHeader {
        format: FORMAT.into(),
        version: VERSION,
        kind: "signal".into(),
        shape: [tensor.l, tensor.r, tensor.n()],
        mode,
        shots_per_entry,
        shot_seed,
        width: tensor.times.width.f64(),
        sigma: tensor.times.sigma.f64(),
        seed: tensor.times.seed,
        times: to_f64s(&tensor.times.times),
        times_prime: None,
        base_times: None,
        base_times_prime: None,
        pairing: None,
        observable: None,
        unitary: None,
    };
    write_body(w, &header, &tensor.data)
}

pub fn read_signal<T: Real, R: Read>(r: R) -> Result<SignalTensor<T>> {
    let (h, data) = read_body::<T, R>(r)?;
    if h.kind != "signal" {
        return Err(fmt_err(format!("expected a signal tensor, found {:?}", h.kind)));
    }
    let mode = parse_mode(&h)?;
    let times = TimeSamples {
        times: h.times.iter().map(|&t| T::lit(t)).collect(),
        width: T::lit(h.width),
        sigma: T::lit(h.sigma),
        seed: h.seed,
    };
    SignalTensor::new(h.shape[0], h.shape[1], data, mode, Arc::new(times))
}

pub fn write_observable<T: Real, W: Write>(w: &mut W, tensor: &ObservableTensor<T>) -> Result<()> {
    let (mode, shots_per_entry, shot_seed) = mode_fields(tensor.mode);
    let header = TensorHeader {
        format: FORMAT.into(),
        version: VERSION,
        kind: "observable".into(),
        shape: [tensor.l, tensor.r, tensor.n()],
        mode,
        shots_per_entry,
        shot_seed,
        width: tensor.base_times.width.f64() * std::f64::consts::SQRT_2,
        sigma: tensor.base_times.sigma.f64(),
        seed: tensor.base_times.seed,
        times: to_f64s(&tensor.t),
        times_prime: Some(to_f64s(&tensor.t_prime)),
        base_times: Some(to_f64s(&tensor.base_times.times)),
        base_times_prime: Some(to_f64s(&tensor.base_times_prime.times)),
        pairing: Some(tensor.pairing),
        observable: Some(tensor.observable.clone()),
        unitary: Some(tensor.unitary),
    };
    write_body(w, &header, &tensor.data)
}

pub fn read_observable<T: Real, R: Read>(r: R) -> Result<ObservableTensor<T>> {
    let (h, data) = read_body::<T, R>(r)?;
    if h.kind != "observable" {
        return Err(fmt_err(format!("expected an observable tensor, found {:?}", h.kind)));
    }
    let mode = parse_mode(&h)?;
    let lit = |v: &[f64]| v.iter().map(|&t| T::lit(t)).collect::<Vec<T>>();
    let tp = h.times_prime.as_ref().ok_or_else(|| fmt_err("missing times_prime"))?;
    if tp.len() != h.times.len() {
        return Err(fmt_err("times_prime length differs from times"));
    }
    let base = |v: &Option<Vec<f64>>, salt: u64| -> Result<Arc<TimeSamples<T>>> {
        Ok(Arc::new(TimeSamples {
            times: lit(v.as_ref().ok_or_else(|| fmt_err("missing base times"))?),
            width: T::lit(h.width / std::f64::consts::SQRT_2),
            sigma: T::lit(h.sigma),
            seed: h.seed ^ salt,
        }))
    };
    Ok(ObservableTensor {
        l: h.shape[0],
        r: h.shape[1],
        data,
        mode,
        t: lit(&h.times),
        t_prime: lit(tp),
        base_times: base(&h.base_times, 0)?,
        base_times_prime: base(&h.base_times_prime, 0)?,
        pairing: h.pairing.ok_or_else(|| fmt_err("missing pairing"))?,
        observable: h.observable.clone().unwrap_or_default(),
        unitary: h.unitary.unwrap_or(false),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::signal::{exact_signal, shot_sample, SpectralModel};
    use crate::acquisition::times::sample_times;
    use crate::models::builders::build_illustrative;

    #[test]
    fn signal_round_trip_and_validation() {
        let (_, phi) = build_illustrative::<f64>();
        let model = SpectralModel::from_overlaps(&[0.0, 0.0, 0.1], &phi, &phi).unwrap();
        let times = Arc::new(sample_times(10.0, 1.0, 20, 1).unwrap());
        let t = shot_sample(&exact_signal(&model, times).unwrap(), 1, 2).unwrap();
        let mut buf = Vec::new();
        write_signal(&mut buf, &t).unwrap();
        let back: SignalTensor<f64> = read_signal(buf.as_slice()).unwrap();
        assert_eq!(back.data, t.data);
        assert_eq!(back.times.times, t.times.times);
        assert_eq!(back.mode, t.mode);
        assert!(read_observable::<f64, _>(buf.as_slice()).is_err());
        buf.truncate(buf.len() - 16);
        assert!(read_signal::<f64, _>(buf.as_slice()).is_err());
    }
}
