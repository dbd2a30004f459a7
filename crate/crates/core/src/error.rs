//! Crate-wide error type.

use crate::model::BidFit;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input: at least one sample is required")]
    EmptyInput,

    #[error("ragged rows: row {row} has {got} bits, expected {expected}")]
    RaggedRows {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("bit width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },

    #[error("sample count mismatch: {left} vs {right}")]
    SampleCountMismatch { left: usize, right: usize },

    #[error("need at least {needed} samples, got {got}")]
    NotEnoughSamples { needed: usize, got: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("standard deviation must be positive, got {0}")]
    InvalidSigma(f64),

    #[error("state {state} out of range for q={q}")]
    StateOutOfRange { state: u32, q: u32 },

    #[error("q must be at least 2, got {0}")]
    InvalidQ(u32),

    #[error("log-binomial undefined: d={d} <= r-1 for r={r}")]
    BinomialDomain { d: f64, r: u64 },

    #[error("cutoff r*={r_star} exceeds n_bits={n_bits}")]
    InvalidCutoff { r_star: usize, n_bits: usize },

    #[error("degenerate histogram: fewer than 2 nonzero bins in the fit domain")]
    DegenerateHistogram,

    #[error("model is infeasible over the whole fit domain")]
    InfeasibleModel,

    #[error("optimizer did not converge within the evaluation budget (best KL {kl:.6e})", kl = best.kl)]
    NotConverged { best: Box<BidFit> },

    #[error("empty chain")]
    EmptyChain,

    #[error("invalid MCMC schedule: steps={steps} must exceed burn_in={burn_in}")]
    InvalidSchedule { steps: u64, burn_in: u64 },

    #[error("step fraction must be positive, got {0}")]
    InvalidStepFraction(f64),

    #[error("MLE undefined at scale r={0}: empty shell")]
    UndefinedAtScale(usize),

    #[error("scale r={r} out of range for n_bits={n_bits}")]
    ScaleOutOfRange { r: usize, n_bits: usize },

    #[error("r={r} exceeds dimension d={d}")]
    VolumeDomain { r: usize, d: usize },

    #[error("hamming_volume capped at d<={cap}, got d={d}")]
    VolumeCap { d: usize, cap: usize },

    #[error("lattice side must be at least 2, got {0}")]
    InvalidLatticeSide(usize),

    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),

    #[error("configuration has {got} sites, lattice has {expected}")]
    SizeMismatch { got: usize, expected: usize },

    #[error("operation requires {required} topology, got {got}")]
    TopologyMismatch {
        required: &'static str,
        got: &'static str,
    },

    #[error("histogram counts must have length n_bits+1={expected}, got {got}")]
    BadHistogramShape { expected: usize, got: usize },

    #[error("invalid file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
