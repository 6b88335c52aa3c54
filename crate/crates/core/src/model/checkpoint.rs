//! `LDCW` checkpoint:
//!
//! ```text
//! magic "LDCWv001"
//! u64 d_in | u64 classes | u8 has_bias
//! W     f64[d_in*classes] row-major
//! bias  f64[classes]      (only if has_bias)
//! ```

use std::fs;
use std::path::Path;

use super::LinearModel;
use crate::binio::{Decoder, Encoder};
use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LDCW_MAGIC: &[u8; 8] = b"LDCWv001";

pub fn encode_checkpoint<T: Scalar>(model: &LinearModel<T>) -> Vec<u8> {
    let to64 = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
    let mut enc = Encoder::new(LDCW_MAGIC);
    enc.u64(model.d_in() as u64)
        .u64(model.classes() as u64)
        .u8(model.bias.is_some() as u8)
        .scalars(&to64(model.weights.as_slice()));
    if let Some(b) = &model.bias {
        enc.scalars(&to64(b));
    }
    enc.finish()
}

pub fn decode_checkpoint<T: Scalar>(bytes: &[u8]) -> Result<LinearModel<T>> {
    let mut dec = Decoder::new(bytes, LDCW_MAGIC, "LDCW")?;
    let d_in = dec.usize()?;
    let classes = dec.usize()?;
    let has_bias = match dec.u8()? {
        0 => false,
        1 => true,
        other => return Err(Error::Format(format!("LDCW: bad bias flag {other}"))),
    };
    let count = d_in
        .checked_mul(classes)
        .ok_or_else(|| Error::Format("LDCW: shape overflows".into()))?;
    let w = dec
        .scalars::<f64>(count)?
        .into_iter()
        .map(T::from_f64_lossy)
        .collect();
    let weights = FeatureMatrix::from_vec(d_in, classes, w)?;
    let bias = if has_bias {
        Some(
            dec.scalars::<f64>(classes)?
                .into_iter()
                .map(T::from_f64_lossy)
                .collect(),
        )
    } else {
        None
    };
    dec.finish()?;
    Ok(LinearModel { weights, bias })
}

pub fn write_checkpoint<T: Scalar>(model: &LinearModel<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_checkpoint(model))?;
    Ok(())
}

pub fn read_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<LinearModel<T>> {
    decode_checkpoint(&fs::read(path)?)
}
