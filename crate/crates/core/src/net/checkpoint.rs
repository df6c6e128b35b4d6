//! Binary checkpoint format.
//!
//! ```text
//! "IFSDF1"                      6 bytes magic
//! u8   scalar width             4 (f32) or 8 (f64)
//! u32  input dimension
//! u32  hidden layer count H
//! u32 x H hidden widths
//! i32  skip layer (-1 = none)
//! f64  softplus beta
//! per layer: weight (out x in, row-major), then bias, in the scalar width
//! ```
//! All integers and floats are little-endian.

use std::path::Path;

use ndarray::{Array1, Array2};

use super::mlp::{Linear, MlpField};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAGIC: &[u8; 6] = b"IFSDF1";

pub fn encode<T: Real>(field: &MlpField<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + field.param_count() * T::BYTES);
    out.extend_from_slice(MAGIC);
    out.push(T::BYTES as u8);
    out.extend_from_slice(&(field.input_dim() as u32).to_le_bytes());
    out.extend_from_slice(&(field.hidden().len() as u32).to_le_bytes());
    for &w in field.hidden() {
        out.extend_from_slice(&(w as u32).to_le_bytes());
    }
    let skip = field.skip().map_or(-1, |s| s as i32);
    out.extend_from_slice(&skip.to_le_bytes());
    out.extend_from_slice(&field.beta().to_f64_lossy().to_le_bytes());
    for p in field.flat_params() {
        p.write_le(&mut out);
    }
    out
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let b = self.data.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(b)
    }

    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }
}

/// Scalar width in bytes recorded in a checkpoint header.
pub fn stored_width(data: &[u8]) -> Option<usize> {
    (data.len() > MAGIC.len() && &data[..MAGIC.len()] == MAGIC).then(|| data[MAGIC.len()] as usize)
}

/// Decodes a checkpoint, converting the stored scalar type to `T` if needed.
pub fn decode<T: Real>(data: &[u8]) -> std::result::Result<MlpField<T>, String> {
    let mut r = Reader { data, pos: 0 };
    let truncated = || "truncated checkpoint".to_string();
    if r.take(6) != Some(MAGIC.as_slice()) {
        return Err("not an IFSDF1 checkpoint".into());
    }
    let width = r.take(1).ok_or_else(truncated)?[0] as usize;
    if width != 4 && width != 8 {
        return Err(format!("unsupported scalar width {width}"));
    }
    let d_in = r.u32().ok_or_else(truncated)? as usize;
    let n_hidden = r.u32().ok_or_else(truncated)? as usize;
    if n_hidden == 0 || n_hidden > 1024 || d_in == 0 || d_in > 16 {
        return Err("implausible architecture header".into());
    }
    let hidden: Vec<usize> = (0..n_hidden)
        .map(|_| r.u32().map(|w| w as usize))
        .collect::<Option<_>>()
        .ok_or_else(truncated)?;
    let skip = i32::from_le_bytes(r.take(4).ok_or_else(truncated)?.try_into().unwrap());
    let skip = if skip < 0 { None } else { Some(skip as usize) };
    if matches!(skip, Some(s) if s == 0 || s >= n_hidden) {
        return Err("skip layer out of range".into());
    }
    let beta = f64::from_le_bytes(r.take(8).ok_or_else(truncated)?.try_into().unwrap());

    let mut scalar = || -> std::result::Result<T, String> {
        let b = r.take(width).ok_or_else(truncated)?;
        Ok(if width == T::BYTES {
            T::read_le(b)
        } else if width == 4 {
            T::lit(f32::read_le(b) as f64)
        } else {
            T::lit(f64::read_le(b))
        })
    };
    let mut layers = Vec::with_capacity(n_hidden + 1);
    let mut prev = d_in;
    for l in 0..=n_hidden {
        let inputs = if skip == Some(l) { prev + d_in } else { prev };
        let outputs = if l < n_hidden { hidden[l] } else { 1 };
        let mut w = Vec::with_capacity(inputs * outputs);
        for _ in 0..inputs * outputs {
            w.push(scalar()?);
        }
        let mut b = Vec::with_capacity(outputs);
        for _ in 0..outputs {
            b.push(scalar()?);
        }
        layers.push(Linear {
            weight: Array2::from_shape_vec((outputs, inputs), w).expect("shape"),
            bias: Array1::from(b),
        });
        prev = outputs;
    }
    if r.pos != data.len() {
        return Err("trailing bytes after parameters".into());
    }
    Ok(MlpField::from_parts(d_in, hidden, skip, T::lit(beta), layers))
}

pub fn save<T: Real>(field: &MlpField<T>, path: &Path) -> Result<()> {
    std::fs::write(path, encode(field)).map_err(|e| Error::io(path, e))
}

pub fn load<T: Real>(path: &Path) -> Result<MlpField<T>> {
    let data = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&data).map_err(|m| Error::format(path, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::NetConfig;

    #[test]
    fn round_trip_is_bit_identical() {
        let cfg = NetConfig::default();
        let f = MlpField::<f32>::random(3, &cfg, 11).unwrap();
        let g: MlpField<f32> = decode(&encode(&f)).unwrap();
        assert_eq!(f, g);
        let q = [0.1f32, 0.2, -0.3];
        assert_eq!(f.eval(&q), g.eval(&q));
        assert_eq!(&encode(&f)[..6], b"IFSDF1");
    }

    #[test]
    fn widening_conversion() {
        let f = MlpField::<f32>::random(2, &NetConfig::default(), 1).unwrap();
        let g: MlpField<f64> = decode(&encode(&f)).unwrap();
        assert_eq!(g.cast::<f32>(), f);
    }

    #[test]
    fn corrupt_inputs() {
        let f = MlpField::<f64>::random(3, &NetConfig::default(), 2).unwrap();
        let bytes = encode(&f);
        assert!(decode::<f64>(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode::<f64>(b"NOTSDF").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(decode::<f64>(&extra).is_err());
    }
}
