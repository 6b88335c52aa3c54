//! Edge-list text files and the `LDCF` binary feature/label container.
//!
//! `LDCF` layout (little-endian):
//!
//! ```text
//! magic    8 bytes  "LDCFv001"
//! rows     u64
//! cols     u64
//! dtype    u8       0 = f64, 1 = f32, 2 = i64 labels
//! payload  rows*cols values, row-major
//! ```

use std::fs;
use std::path::Path;

use super::DirectedGraph;
use crate::binio::{Decoder, Encoder};
use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LDCF_MAGIC: &[u8; 8] = b"LDCFv001";
const TAG_F64: u8 = 0;
const TAG_F32: u8 = 1;
const TAG_I64: u8 = 2;

/// Read a whitespace-separated `u v` edge list. Node count is `max index + 1`
/// unless `num_nodes` is given.
pub fn load_edge_list(path: impl AsRef<Path>, num_nodes: Option<usize>) -> Result<DirectedGraph> {
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, num_nodes)
}

pub fn parse_edge_list(text: &str, num_nodes: Option<usize>) -> Result<DirectedGraph> {
    let mut edges = Vec::new();
    let mut max_idx: Option<usize> = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            line: lineno + 1,
            msg,
        };
        let mut fields = line.split_whitespace();
        let mut endpoint = || -> Result<usize> {
            let tok = fields
                .next()
                .ok_or_else(|| parse_err("expected two node indices".into()))?;
            tok.parse::<usize>()
                .map_err(|_| parse_err(format!("invalid node index {tok:?}")))
        };
        let u = endpoint()?;
        let v = endpoint()?;
        if fields.next().is_some() {
            return Err(parse_err(
                "unexpected third column (weighted edges are not supported)".into(),
            ));
        }
        if let Some(n) = num_nodes {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::Bounds { index: x, n });
                }
            }
        }
        max_idx = Some(max_idx.map_or(u.max(v), |m| m.max(u).max(v)));
        edges.push((u, v));
    }
    let n = num_nodes.unwrap_or_else(|| max_idx.map_or(0, |m| m + 1));
    DirectedGraph::from_edges(n, edges)
}

pub fn write_edge_list(graph: &DirectedGraph, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::with_capacity(graph.m() * 12);
    for (u, v) in graph.edges() {
        out.push_str(&format!("{u} {v}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn encode_features<T: Scalar>(x: &FeatureMatrix<T>) -> Vec<u8> {
    let mut enc = Encoder::new(LDCF_MAGIC);
    enc.u64(x.rows() as u64)
        .u64(x.cols() as u64)
        .u8(T::DTYPE_TAG)
        .scalars(x.as_slice());
    enc.finish()
}

/// Decode an `LDCF` feature payload of either float width into `T`.
pub fn decode_features<T: Scalar>(bytes: &[u8]) -> Result<FeatureMatrix<T>> {
    let mut dec = Decoder::new(bytes, LDCF_MAGIC, "LDCF")?;
    let rows = dec.usize()?;
    let cols = dec.usize()?;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("LDCF: shape overflows".into()))?;
    let data: Vec<T> = match dec.u8()? {
        TAG_F64 => dec
            .scalars::<f64>(count)?
            .into_iter()
            .map(T::from_f64_lossy)
            .collect(),
        TAG_F32 => dec
            .scalars::<f32>(count)?
            .into_iter()
            .map(|v| T::from_f64_lossy(v as f64))
            .collect(),
        TAG_I64 => {
            return Err(Error::Format(
                "LDCF: expected features, found labels".into(),
            ))
        }
        tag => return Err(Error::Format(format!("LDCF: unknown dtype tag {tag}"))),
    };
    dec.finish()?;
    let x = FeatureMatrix::from_vec(rows, cols, data)?;
    if !x.is_finite() {
        return Err(Error::Validation(
            "LDCF features contain non-finite values".into(),
        ));
    }
    Ok(x)
}

pub fn encode_labels(labels: &[i64]) -> Vec<u8> {
    let mut enc = Encoder::new(LDCF_MAGIC);
    enc.u64(labels.len() as u64).u64(1).u8(TAG_I64);
    for &l in labels {
        enc.u64(l as u64);
    }
    enc.finish()
}

pub fn decode_labels(bytes: &[u8]) -> Result<Vec<i64>> {
    let mut dec = Decoder::new(bytes, LDCF_MAGIC, "LDCF")?;
    let rows = dec.usize()?;
    let cols = dec.usize()?;
    let tag = dec.u8()?;
    if tag != TAG_I64 {
        return Err(Error::Format(format!(
            "LDCF: expected label dtype 2, found {tag}"
        )));
    }
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("LDCF: shape overflows".into()))?;
    let labels = dec.i64s(count)?;
    dec.finish()?;
    Ok(labels)
}

pub fn write_features<T: Scalar>(x: &FeatureMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_features(x))?;
    Ok(())
}

pub fn read_features<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureMatrix<T>> {
    decode_features(&fs::read(path)?)
}

pub fn write_labels(labels: &[i64], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_labels(labels))?;
    Ok(())
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<i64>> {
    decode_labels(&fs::read(path)?)
}
