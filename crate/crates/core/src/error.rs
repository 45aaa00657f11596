//! Error types shared across the pipelines.

use thiserror::Error;

/// Library-wide error type.
///
/// Every numerical gate that can fail loudly (drift, branch tracking,
/// snapping, rounding) has its own variant so callers and the CLI can
/// report structured diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("critical value: {0}")]
    CriticalValue(String),

    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),

    #[error("conserved-quantity drift {drift:.3e} exceeds gate {gate:.3e} ({context})")]
    DriftExceeded {
        drift: f64,
        gate: f64,
        context: String,
    },

    #[error("event root not bracketed within step: {0}")]
    MissedEvent(String),

    #[error("no first return before t_max = {t_max}: {context}")]
    NoReturn { t_max: f64, context: String },

    #[error("rotation-number branch jump |Δθ| = {jump:.4} exceeds gate {gate} at sample {sample}")]
    BranchJump { jump: f64, gate: f64, sample: usize },

    #[error("variation {value:.6} is not within {tol} of an integer multiple of 1/{denom}")]
    NonIntegerVariation { value: f64, tol: f64, denom: i64 },

    #[error("degenerate fixed point: {0}")]
    DegenerateFixedPoint(String),

    #[error("fixed point at F = ({j:.4}, {h:.4}) lies within {margin} of the loop; reposition the loop")]
    FixedPointOnLoop { j: f64, h: f64, margin: f64 },

    #[error("loop is invalid: {0}")]
    InvalidLoop(String),

    #[error("eigenvalue truncation not converged; retry with l_max >= {suggested}")]
    TruncationNotConverged { suggested: usize },

    #[error("turning-point bracketing failed: {0}")]
    TurningPointFailure(String),

    #[error("cell snap failed at step {step}: distance {distance:.3} x spacing exceeds {threshold}")]
    SnapFailure {
        step: usize,
        distance: f64,
        threshold: f64,
    },

    #[error("lattice defect inconsistency: final cell solve is not unimodular ({0})")]
    DefectInconsistency(String),

    #[error("hole in lattice at step {step} near (j, e) = ({j:.4}, {e:.4})")]
    LatticeHole { step: usize, j: f64, e: f64 },

    #[error("isotropy resolution failed: {0}")]
    IsotropyAmbiguous(String),

    #[error("inconsistent Seifert data: {0}")]
    InconsistentSeifertData(String),

    #[error("trajectory captured near the potential maximum (no escape before t_max = {t_max})")]
    Captured { t_max: f64 },

    #[error("long-range tail detected: radial action difference does not converge ({0})")]
    LongRangeTail(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
