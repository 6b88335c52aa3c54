use crate::dense::FeatureMatrix;
use crate::error::{Error, Result};
use crate::graph::{Item, Subset};
use crate::propagation::AggregatedFeatures;
use crate::scalar::Scalar;

/// Design matrix for one subset. A node row is `[re_u ‖ im_u]`; a pair row
/// is `[re_u ‖ im_u ‖ re_v ‖ im_v]`. All items of a subset must be of one kind.
pub fn assemble_inputs<T: Scalar>(
    agg: &AggregatedFeatures<T>,
    subset: &Subset,
) -> Result<FeatureMatrix<T>> {
    let f = agg.width();
    let n = agg.n();
    let pairs = matches!(subset.items.first(), Some(Item::Pair(..)));
    let width = if pairs { 4 * f } else { 2 * f };
    let mut out = FeatureMatrix::zeros(subset.len(), width);
    let check = |u: usize| {
        if u >= n {
            return Err(Error::Validation(format!(
                "node {u} out of range for {n} feature rows"
            )));
        }
        Ok(())
    };
    for (r, item) in subset.items.iter().enumerate() {
        let row = out.row_mut(r);
        match (*item, pairs) {
            (Item::Node(u), false) => {
                check(u)?;
                row[..f].copy_from_slice(agg.real.row(u));
                row[f..].copy_from_slice(agg.imag.row(u));
            }
            (Item::Pair(u, v), true) => {
                check(u)?;
                check(v)?;
                row[..f].copy_from_slice(agg.real.row(u));
                row[f..2 * f].copy_from_slice(agg.imag.row(u));
                row[2 * f..3 * f].copy_from_slice(agg.real.row(v));
                row[3 * f..].copy_from_slice(agg.imag.row(v));
            }
            _ => return Err(Error::Validation("subset mixes node and pair items".into())),
        }
    }
    Ok(out)
}
