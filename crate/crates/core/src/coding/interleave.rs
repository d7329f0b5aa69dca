//! Row-column block interleaver: write row-wise into `rows x cols`,
//! read column-wise. Works over any element type so the receiver can
//! deinterleave soft metrics directly.

/// Row count used by the payload chain.
pub const INTERLEAVER_ROWS: usize = 8;

/// Interleaves, padding with defaults up to a whole number of columns.
/// Returns the permuted sequence and the pad count the receiver needs to
/// strip after deinterleaving.
pub fn interleave<T: Clone + Default>(xs: &[T], rows: usize) -> (Vec<T>, usize) {
    assert!(rows >= 1);
    let pad = (rows - xs.len() % rows) % rows;
    let mut padded = xs.to_vec();
    padded.resize(xs.len() + pad, T::default());
    let cols = padded.len() / rows;
    let mut out = Vec::with_capacity(padded.len());
    for c in 0..cols {
        for r in 0..rows {
            out.push(padded[r * cols + c].clone());
        }
    }
    (out, pad)
}

/// Exact inverse of [`interleave`] for a pre-pad length of `orig_len`;
/// the pad elements are dropped.
pub fn deinterleave<T: Clone + Default>(xs: &[T], rows: usize, orig_len: usize) -> Vec<T> {
    assert!(rows >= 1);
    assert!(xs.len() % rows == 0, "interleaved length must be a rows multiple");
    let cols = xs.len() / rows;
    let mut out = vec![T::default(); xs.len()];
    for c in 0..cols {
        for r in 0..rows {
            out[r * cols + c] = xs[c * rows + r].clone();
        }
    }
    out.truncate(orig_len);
    out
}
