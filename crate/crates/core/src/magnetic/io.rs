//! `LDCM` dump of a [`ComplexSparseMatrix`]:
//!
//! ```text
//! magic "LDCMv001" | u64 n | u64 nnz | row_ptr u64[n+1] | col_idx u64[nnz] | re f64[nnz] | im f64[nnz]
//! ```

use std::fs;
use std::path::Path;

use super::ComplexSparseMatrix;
use crate::binio::{Decoder, Encoder};
use crate::error::Result;
use crate::scalar::Scalar;

pub const LDCM_MAGIC: &[u8; 8] = b"LDCMv001";

pub fn encode_matrix<T: Scalar>(m: &ComplexSparseMatrix<T>) -> Vec<u8> {
    let to64 = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
    let mut enc = Encoder::new(LDCM_MAGIC);
    enc.u64(m.n() as u64)
        .u64(m.nnz() as u64)
        .usizes(m.row_ptr())
        .usizes(m.col_idx())
        .scalars(&to64(m.re()))
        .scalars(&to64(m.im()));
    enc.finish()
}

pub fn decode_matrix<T: Scalar>(bytes: &[u8]) -> Result<ComplexSparseMatrix<T>> {
    let mut dec = Decoder::new(bytes, LDCM_MAGIC, "LDCM")?;
    let n = dec.usize()?;
    let nnz = dec.usize()?;
    let row_ptr = dec.usizes(n.saturating_add(1))?;
    let col_idx = dec.usizes(nnz)?;
    let re = dec
        .scalars::<f64>(nnz)?
        .into_iter()
        .map(T::from_f64_lossy)
        .collect();
    let im = dec
        .scalars::<f64>(nnz)?
        .into_iter()
        .map(T::from_f64_lossy)
        .collect();
    dec.finish()?;
    ComplexSparseMatrix::from_parts(n, row_ptr, col_idx, re, im)
}

pub fn write_matrix<T: Scalar>(m: &ComplexSparseMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_matrix(m))?;
    Ok(())
}

pub fn read_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<ComplexSparseMatrix<T>> {
    decode_matrix(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::graph::generate_random_digraph;
    use crate::magnetic::magnetic_graph_operator;

    #[test]
    fn round_trip_and_truncation() {
        let g = generate_random_digraph(25, 70, 8).unwrap();
        let m = magnetic_graph_operator::<f64>(&g, 0.2).unwrap();
        let bytes = encode_matrix(&m);
        assert_eq!(bytes.len(), 8 + 16 + 8 * (26 + 3 * m.nnz()));
        assert_eq!(decode_matrix::<f64>(&bytes).unwrap(), m);
        assert!(matches!(
            decode_matrix::<f64>(&bytes[..bytes.len() - 3]),
            Err(Error::Format(_))
        ));
    }
}
