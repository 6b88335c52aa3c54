//! `LDCP` cache of aggregated features:
//!
//! ```text
//! magic "LDCPv001"
//! u64 n | u64 f' | f64 q | u64 K | u8 aggregation | u64 graph fingerprint
//! real plane  f64[n*f'] row-major
//! imag plane  f64[n*f'] row-major
//! ```

use std::fs;
use std::path::Path;

use super::{AggregatedFeatures, Aggregation, PropagationConfig};
use crate::binio::{Decoder, Encoder};
use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LDCP_MAGIC: &[u8; 8] = b"LDCPv001";
pub const CACHE_HEADER_BYTES: usize = 8 + 8 + 8 + 8 + 8 + 1 + 8;

pub fn encode_cache<T: Scalar>(agg: &AggregatedFeatures<T>, fingerprint: u64) -> Vec<u8> {
    let to64 = |m: &FeatureMatrix<T>| {
        m.as_slice()
            .iter()
            .map(|v| v.to_f64_lossy())
            .collect::<Vec<f64>>()
    };
    let mut enc = Encoder::new(LDCP_MAGIC);
    enc.u64(agg.n() as u64)
        .u64(agg.width() as u64)
        .f64(agg.config.q)
        .u64(agg.config.k as u64)
        .u8(agg.config.aggregation.tag())
        .u64(fingerprint)
        .scalars(&to64(&agg.real))
        .scalars(&to64(&agg.imag));
    enc.finish()
}

/// Decode a cache, returning the features and the recorded graph
/// fingerprint. With `expected` set, a different fingerprint is a
/// stale-cache error.
pub fn decode_cache<T: Scalar>(
    bytes: &[u8],
    expected: Option<u64>,
) -> Result<(AggregatedFeatures<T>, u64)> {
    let mut dec = Decoder::new(bytes, LDCP_MAGIC, "LDCP")?;
    let n = dec.usize()?;
    let width = dec.usize()?;
    let q = dec.f64()?;
    let k = dec.usize()?;
    let aggregation = Aggregation::from_tag(dec.u8()?)?;
    let fingerprint = dec.u64()?;
    if let Some(want) = expected {
        if want != fingerprint {
            return Err(Error::StaleCache {
                expected: want,
                found: fingerprint,
            });
        }
    }
    let count = n
        .checked_mul(width)
        .ok_or_else(|| Error::Format("LDCP: shape overflows".into()))?;
    let plane = |dec: &mut Decoder| -> Result<FeatureMatrix<T>> {
        let v = dec
            .scalars::<f64>(count)?
            .into_iter()
            .map(T::from_f64_lossy)
            .collect();
        FeatureMatrix::from_vec(n, width, v)
    };
    let real = plane(&mut dec)?;
    let imag = plane(&mut dec)?;
    dec.finish()?;
    let config = PropagationConfig { q, k, aggregation };
    Ok((AggregatedFeatures { real, imag, config }, fingerprint))
}

pub fn write_cache<T: Scalar>(
    agg: &AggregatedFeatures<T>,
    fingerprint: u64,
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, encode_cache(agg, fingerprint))?;
    Ok(())
}

pub fn read_cache<T: Scalar>(
    path: impl AsRef<Path>,
    expected: Option<u64>,
) -> Result<(AggregatedFeatures<T>, u64)> {
    decode_cache(&fs::read(path)?, expected)
}
