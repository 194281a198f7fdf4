use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "polar-coded", version, about = "Polar-coded distributed matrix multiplication experiments")]
pub struct Cli {
    /// Seed for every random draw; required by stochastic commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Runtime model JSON (distribution, crash probability, timeout).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (directory for `encode`). Defaults to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the task pool.
    #[arg(long, global = true, default_value_t = 4)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a code construction and print its channel erasure probabilities.
    Construct(ConstructArgs),
    /// Split a matrix into row blocks and write the coded worker blocks.
    Encode(EncodeArgs),
    /// Recover a matrix from a subset of the coded blocks written by `encode`.
    Decode(DecodeArgs),
    /// Check a 2x2 kernel, or scan every kernel over {-1, 0, 1}.
    KernelCheck(KernelCheckArgs),
    /// Time polar and Reed-Solomon encode/decode over a range of N.
    BenchCodes(BenchArgs),
    /// Per-channel run-time CDFs after polarization.
    Polarize(PolarizeArgs),
    /// Decodability times of a coding scheme over many trials.
    Simulate(SimulateArgs),
    /// One coded (or uncoded) matrix-vector product on the task pool.
    Matvec(MatvecArgs),
    /// One product-coded matrix-matrix product.
    Matmul2d(Matmul2dArgs),
    /// Least-squares gradient descent with the gradient product on the pool.
    Gd(GdArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConstructArgs {
    #[arg(long)]
    pub n: usize,
    /// Worker erasure probability; picks `n_data = round(N (1 - epsilon))` unless `--n-data` is given.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Number of data channels (epsilon defaults to 0.5 for the probabilities).
    #[arg(long)]
    pub n_data: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EncodeArgs {
    /// Construction JSON from `construct`.
    #[arg(long)]
    pub construction: PathBuf,
    /// Matrix in the binary block format.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecodeArgs {
    /// Directory written by `encode`.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated worker indices to use; defaults to every block file present.
    #[arg(long)]
    pub available: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelCheckArgs {
    /// Entries `k11,k12,k21,k22`.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "scan")]
    pub kernel: Option<String>,
    #[arg(long, conflicts_with = "kernel")]
    pub scan: bool,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 8)]
    pub n_min: usize,
    #[arg(long, default_value_t = 512)]
    pub n_max: usize,
    /// Columns of A; A has 100 N rows.
    #[arg(long, default_value_t = 64)]
    pub cols: usize,
    /// Columns of x; the decoders recover the worker outputs of `A x`.
    #[arg(long, default_value_t = 1)]
    pub rhs: usize,
    /// Each timing is the fastest of at least this many runs (more for fast cases).
    #[arg(long, default_value_t = 7)]
    pub repeats: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PolarizeArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Grid size: the CDFs are reported at this many base quantiles.
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Polar,
    Mds,
    Lt,
    Polar2d,
    Mds2d,
    Partial,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scheme: SchemeKind,
    /// Total number of workers (`N1 * N2` for the product schemes, which use a square grid).
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Data blocks for the 1D schemes; defaults to `round(N (1 - epsilon))`.
    #[arg(long)]
    pub n_data: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Number of sub-codes for `partial`.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long, default_value_t = polar_coded::baselines::DEFAULT_C)]
    pub lt_c: f64,
    #[arg(long, default_value_t = polar_coded::baselines::DEFAULT_DELTA)]
    pub lt_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GdSchemeKind {
    Coded,
    Uncoded,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MatvecArgs {
    #[arg(long, value_enum, default_value = "coded")]
    pub scheme: GdSchemeKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 256)]
    pub rows: usize,
    #[arg(long, default_value_t = 64)]
    pub cols: usize,
    /// Sleep `delay * scale` wall seconds per task instead of replaying virtual time.
    #[arg(long)]
    pub live_scale: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Matmul2dArgs {
    #[arg(long)]
    pub n1: usize,
    #[arg(long)]
    pub n2: usize,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    /// A is `m x k`, B is `k x p`.
    #[arg(long, default_value_t = 64)]
    pub m: usize,
    #[arg(long, default_value_t = 32)]
    pub k: usize,
    #[arg(long, default_value_t = 48)]
    pub p: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GdArgs {
    #[arg(long, value_enum, default_value = "coded")]
    pub scheme: GdSchemeKind,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 0.25)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 64)]
    pub rows: usize,
    #[arg(long, default_value_t = 16)]
    pub cols: usize,
    /// Right-hand sides solved together.
    #[arg(long, default_value_t = 4)]
    pub rhs: usize,
    #[arg(long, default_value_t = 200)]
    pub iterations: usize,
    /// Step size; defaults to `1 / ||A^T A||_2`.
    #[arg(long)]
    pub mu: Option<f64>,
}
