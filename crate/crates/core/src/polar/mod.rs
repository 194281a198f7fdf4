//! Polar-code construction, encoding and sequential erasure decoding over
//! full-precision blocks.
//!
//! Node `(i, j)` is row `i` at level `j`; level 0 holds the inputs and level
//! `log2 N` the worker outputs. Between levels `j` and `j + 1` rows `i` and
//! `i ^ 2^j` form a butterfly: the upper row (bit `j` clear) becomes the sum of
//! the pair and the lower row passes through unchanged.

mod construction;
mod decode;
mod encode;

pub use construction::{compute_channel_erasure_probs, select_frozen_set, CodeConstruction, ConstructionDoc};
pub use decode::{
    check_decodability, decode, decode_matvec, decode_with_stats, try_decode, DecodeStats, IndicatorVector,
    NodeGrid, NodeValue,
};
pub(crate) use decode::decodable_mask;
pub use encode::{encode, encode_blocks, encode_counted, generator_matrix};

use crate::error::{Error, Result};

/// `log2(n)` for powers of two `n >= 2`.
pub(crate) fn log2_exact(n: usize) -> Result<u32> {
    if n >= 2 && n.is_power_of_two() {
        Ok(n.trailing_zeros())
    } else {
        Err(Error::Construction(format!("N must be a power of 2 (at least 2), got {n}")))
    }
}

#[inline]
pub(crate) fn partner(i: usize, level: u32) -> usize {
    i ^ (1 << level)
}

#[inline]
pub(crate) fn is_upper(i: usize, level: u32) -> bool {
    i & (1 << level) == 0
}
