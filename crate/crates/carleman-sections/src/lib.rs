//! Best constants of finite sections of the weighted Carleman inequality.
//!
//! For a positive, non-decreasing weight sequence `λ_1, λ_2, ...` with prefix
//! sums `Λ_n`, the weighted Carleman inequality bounds the sum of weighted
//! geometric means `G_n = Π_{k≤n} a_k^{λ_k/Λ_n}` by `e^M · Σ a_n`, where `M`
//! is the supremum of `(Λ_n/λ_n)·log((Λ_{n+1}/λ_{n+1})/(Λ_n/λ_n))`. Truncating
//! both sums after `N` terms yields a strictly smaller best constant `μ_N`.
//!
//! This crate computes `μ_N` exactly (to double precision) for arbitrary
//! admissible weights, and provides the surrounding verification machinery:
//!
//! * [`weights`] — weight families, the derived constants `M` and `C`, and a
//!   checker for the structural hypotheses the asymptotic law depends on;
//! * [`recursion`] — the scalar recurrence `h_k(μ)`, its breakdown index, and
//!   bisection for the unique root defining `μ_N`;
//! * [`extremal`] — reconstruction of the optimizing vector from `μ_N` and an
//!   independent brute-force maximizer for small `N`;
//! * [`asymptotics`] — the θ-integral, the second-order expansion
//!   `μ_N ≈ e^M − 2π²e^M/(C²(log N)²)`, and residual fitting against exact
//!   values;
//! * [`cli`] — the `carleman` command line front end (CSV/JSON output).
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod asymptotics;
pub mod cli;
pub mod extremal;
pub mod hypotheses;
pub mod recursion;
pub mod weights;

pub use asymptotics::{
    fit_residual, predicted_log_breakdown, predicted_mu, theta, theta_infinity,
    AsymptoticPrediction, ResidualFit,
};
pub use extremal::{
    carleman_quotient, oracle_maximize, reconstruct_extremal, verify_stationarity, ExtremalVector,
};
pub use hypotheses::{check_hypotheses, CheckStatus, Condition, ConditionCheck, HypothesisReport};
pub use recursion::{
    breakdown_index, critical_sequence, h_step, h_trace, section_constant,
    section_constant_with_tol, BreakdownResult, HTrace, SectionConstant, StepOutcome,
};
pub use weights::{
    estimate_constants, ConstantSource, WeightConstants, WeightFamily, WeightSequence,
};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("weight index {index} out of range for explicit family of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("non-positive or non-finite weight {value} at index {index}")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("weight spec `{0}` not recognized (expected `unit`, `power:alpha=<f>` or `file:<path>`)")]
    BadSpec(String),
    #[error("power family requires alpha >= 1, got {0}")]
    BadAlpha(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("supremum defining M still growing at n = {0}; condition (finiteness of M) may fail")]
    SupremumNotConverged(usize),
    #[error("non-finite value {0} fed to the recurrence")]
    NonFiniteInput(f64),
    #[error("no sign change on ({lo}, {hi}) for section size {n}; hypotheses violated or N out of numeric range")]
    BracketFailure { n: usize, lo: f64, hi: f64 },
    #[error("reconstructed coefficient a_{index} = {value} is non-positive; mu not converged or hypotheses violated")]
    NonPositiveCoefficient { index: usize, value: f64 },
    #[error("theta integrand denominator is non-positive at x = {0}")]
    NonPositiveDenominator(f64),
    #[error("mu = {mu} outside the admissible range ({lo}, {hi}]")]
    MuOutOfRange { mu: f64, lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
