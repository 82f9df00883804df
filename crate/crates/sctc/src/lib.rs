//! Exact density evolution and threshold analysis for turbo-like code
//! ensembles on the binary erasure channel (BEC).
//!
//! The toolkit derives the exact erasure transfer functions of BCJR component
//! decoders from convolutional-encoder trellises, runs density evolution for
//! parallel concatenated (PCC), serially concatenated (SCC) and braided (BCC)
//! ensembles — uncoupled, spatially coupled with memory `m`, and randomly
//! punctured — and computes belief-propagation, MAP (area-theorem) and
//! potential-function thresholds.
//!
//! The pipeline, bottom to top:
//!
//! * [`trellis`] parses binary rational generator matrices given in octal or
//!   binary notation and realizes them as state/branch tables.
//! * [`metric_chain`] enumerates the finite Markov chain of BCJR
//!   forward/backward metric supports on the BEC and evaluates the exact
//!   extrinsic erasure probability `f_l(p_1, ..., p_n)` of every code bit.
//! * [`ensembles`] defines the message graph and one-iteration update of each
//!   ensemble family, including coupling and random puncturing.
//! * [`de_engine`] drives density evolution to fixed points and extracts BP
//!   thresholds (bisection) and MAP thresholds (area theorem).
//! * [`potential`] evaluates scalar admissible systems `(f, g)`, their
//!   potential functions `U(x; eps)`, and the associated thresholds.
//! * [`presets`] and [`cli`] wrap everything into reproducible threshold
//!   tables and a command-line front end.
//!
//! # Example
//!
//! ```
//! use sctc::trellis::{parse_generator, build_trellis, Notation};
//! use sctc::metric_chain::TransferEvaluator;
//!
//! // Rate-1/2 recursive systematic encoder (1, 5/7) in octal notation.
//! let g = parse_generator("1,5/7", Notation::Octal).unwrap();
//! let trellis = build_trellis(&g).unwrap();
//! let mut eval = TransferEvaluator::for_trellis(&trellis).unwrap();
//!
//! // Extrinsic erasure probabilities when both streams arrive erased w.p. 0.5.
//! let f = eval.transfer(&[0.5, 0.5]).unwrap();
//! assert!(f.iter().all(|&x| (0.0..=1.0).contains(&x)));
//! ```

pub mod cli;
pub mod de_engine;
pub mod ensembles;
pub mod metric_chain;
pub mod potential;
pub mod presets;
pub mod report;
pub mod trellis;

/// Errors surfaced by parsing, validation and the numerical drivers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed generator string or polynomial notation.
    #[error("parse error: {0}")]
    Parse(String),
    /// An ensemble or run configuration violates a structural constraint.
    #[error("invalid configuration: {0}")]
    Validation(String),
    /// Metric-support closure grew past the configured cap.
    #[error("metric-support enumeration exceeded cap of {cap} supports")]
    EnumerationCap { cap: usize },
    /// The trellis state space does not fit the support bitmask.
    #[error("trellis has {states} states; metric-chain analysis supports at most {max}")]
    TooManyStates { states: usize, max: usize },
    /// Erasure-pattern enumeration is exponential in the output count.
    #[error("encoder has {n} output positions; erasure-pattern enumeration supports at most 8")]
    TooManyOutputs { n: usize },
    /// Steady-state computation failed to reach the residual target.
    #[error("steady-state computation stalled at residual {residual:.3e}")]
    SteadyState { residual: f64 },
    /// Adaptive quadrature hit the interval cap before the tolerance.
    #[error("quadrature failed to reach tolerance {tol:.1e} within {max_intervals} intervals")]
    Quadrature { tol: f64, max_intervals: usize },
    /// A bisection observed success above a failure; the iteration cap is too small.
    #[error("bisection oracle inconsistent near [{lo}, {hi}]; increase max_iter")]
    InconsistentOracle { lo: f64, hi: f64 },
    /// The average extrinsic erasure probability must be non-decreasing in epsilon.
    #[error("average extrinsic erasure probability decreases near eps = {eps} ({before} -> {after})")]
    NonMonotoneExtrinsic { eps: f64, before: f64, after: f64 },
    /// No unstable fixed point exists above the BP threshold.
    #[error("no unstable fixed point above the BP threshold; scalar system is degenerate")]
    DegenerateSystem,
    /// The recursion-based and grid-based BP threshold tests disagree.
    #[error("scalar-recursion and grid-scan BP thresholds disagree: {recursion} vs {grid}")]
    ThresholdMismatch { recursion: f64, grid: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
