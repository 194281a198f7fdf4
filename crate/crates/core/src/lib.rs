//! Straggler-resilient coded matrix multiplication with polar codes over a
//! real-valued erasure channel, plus the baselines and simulation harness used
//! to compare it against MDS and LT codes.

pub mod baselines;
pub mod coded2d;
pub mod error;
pub mod gd;
pub mod kernel;
pub mod matrix;
pub mod partial;
pub mod polar;
pub mod sim;

pub use error::{Error, Result};
pub use matrix::{Block, PartitionedMatrix};
pub use polar::CodeConstruction;
