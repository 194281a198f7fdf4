//! Comparison codes: real-valued MDS (Vandermonde) and LT with peeling.

mod lt;
mod mds;

pub use lt::{
    lt_encode_blocks, lt_encode_stream, lt_peel_decode, lt_peelable, robust_soliton, LtCode, LtSymbol, DEFAULT_C,
    DEFAULT_DELTA,
};
pub use mds::{mds_decode, mds_encode, mds_encode_blocks, MdsCode, PointSet};
