use rayon::prelude::*;

use super::ComplexSparseMatrix;
use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rows per rayon task; small enough to balance skewed degree distributions.
const ROW_CHUNK: usize = 256;

/// `M (Xr + i Xi)` returned as `(Re, Im)`:
///
/// ```text
/// Re = M_re Xr - M_im Xi
/// Im = M_re Xi + M_im Xr
/// ```
///
/// Output rows are computed independently, each accumulating its stored
/// entries in column order, so the result does not depend on how rows are
/// spread across threads.
pub fn complex_spmm<T: Scalar>(
    m: &ComplexSparseMatrix<T>,
    xr: &FeatureMatrix<T>,
    xi: &FeatureMatrix<T>,
) -> Result<(FeatureMatrix<T>, FeatureMatrix<T>)> {
    if xr.shape() != xi.shape() {
        return Err(Error::Argument(format!(
            "real plane {:?} and imaginary plane {:?} differ in shape",
            xr.shape(),
            xi.shape()
        )));
    }
    if xr.rows() != m.n() {
        return Err(Error::Argument(format!(
            "operator is {0}x{0}, features have {1} rows",
            m.n(),
            xr.rows()
        )));
    }
    let (n, f) = xr.shape();
    let mut out_re = FeatureMatrix::zeros(n, f);
    let mut out_im = FeatureMatrix::zeros(n, f);
    if f == 0 || n == 0 {
        return Ok((out_re, out_im));
    }

    let (ptr, cols, vre, vim) = (m.row_ptr(), m.col_idx(), m.re(), m.im());
    let (xr_s, xi_s) = (xr.as_slice(), xi.as_slice());
    out_re
        .as_mut_slice()
        .par_chunks_mut(f * ROW_CHUNK)
        .zip(out_im.as_mut_slice().par_chunks_mut(f * ROW_CHUNK))
        .enumerate()
        .for_each(|(chunk, (re_rows, im_rows))| {
            let first = chunk * ROW_CHUNK;
            for (local, (ore, oim)) in re_rows.chunks_mut(f).zip(im_rows.chunks_mut(f)).enumerate()
            {
                let u = first + local;
                for p in ptr[u]..ptr[u + 1] {
                    let v = cols[p];
                    let (a, b) = (vre[p], vim[p]);
                    let src_r = &xr_s[v * f..(v + 1) * f];
                    let src_i = &xi_s[v * f..(v + 1) * f];
                    if b == T::zero() {
                        for j in 0..f {
                            ore[j] += a * src_r[j];
                            oim[j] += a * src_i[j];
                        }
                    } else {
                        for j in 0..f {
                            ore[j] += a * src_r[j] - b * src_i[j];
                            oim[j] += a * src_i[j] + b * src_r[j];
                        }
                    }
                }
            }
        });
    Ok((out_re, out_im))
}
