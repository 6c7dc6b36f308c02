use thiserror::Error;

/// Errors raised by the measurement calculus.
///
/// Numeric payloads are widened to `f64` so the error type does not depend on
/// the scalar type of the computation that raised it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid dimension {0}: dimensions must be at least 1")]
    InvalidDimension(usize),

    #[error("tolerance must be finite and non-negative, got {0}")]
    InvalidTolerance(f64),

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("effect violates lower bound 0 (min eigenvalue {min_eigenvalue:e})")]
    EffectBelowZero { min_eigenvalue: f64 },

    #[error("effect violates upper bound 1 (max eigenvalue {max_eigenvalue})")]
    EffectAboveOne { max_eigenvalue: f64 },

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("state has trace {trace}, outside the allowed range")]
    BadTrace { trace: f64 },

    #[error("a full state is required here")]
    PartialStateNotAllowed,

    #[error("probability {0} lies outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange(f64),

    #[error("observable needs at least one outcome")]
    NoOutcomes,

    #[error("duplicate outcome label {0}")]
    DuplicateLabel(String),

    #[error("unknown outcome label {0}")]
    UnknownLabel(String),

    #[error("effects do not sum to the identity (residual {residual:e})")]
    NotObservable { residual: f64 },

    #[error("outcome {label}: {source}")]
    InvalidOutcome {
        label: String,
        #[source]
        source: Box<Error>,
    },

    #[error("map is not total on its domain: missing {0}")]
    NotTotal(String),

    #[error("map is not surjective: codomain label {0} is never hit")]
    NotSurjective(String),

    #[error("stochastic matrix row {row} sums to {sum}")]
    NotStochastic { row: String, sum: f64 },

    #[error("stochastic matrix has a negative entry {0}")]
    NegativeProbability(f64),

    #[error("Kraus list is empty")]
    EmptyKraus,

    #[error("operation increases trace (max eigenvalue of sum S*S is {max_eigenvalue})")]
    TraceIncreasing { max_eigenvalue: f64 },

    #[error("map is not completely positive (Choi min eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("total operation is not trace preserving (residual {residual:e})")]
    NotTracePreserving { residual: f64 },

    #[error("effect is not an atom")]
    NotAtom,

    #[error("instrument is not trivial (residual {residual:e})")]
    NotTrivial { residual: f64 },

    #[error("observables do not commute (max commutator norm {norm:e})")]
    NonCommuting { norm: f64 },

    #[error("outcome count {count} exceeds the enumeration cap {cap}")]
    OutcomeCap { count: usize, cap: usize },

    #[error("outcome spaces do not match: {0}")]
    OutcomeSpaceMismatch(String),

    #[error("measurement models do not share base, probe, probe state and interaction")]
    IncomparableModels,

    #[error("coexistence witness no longer replays (residual {residual:e})")]
    StaleWitness { residual: f64 },

    #[error("unsupported entity for this operation: {0}")]
    UnsupportedEntity(&'static str),

    #[error("invalid outcome label syntax: {0}")]
    LabelSyntax(String),

    #[error("eigen/singular value decomposition did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, Error>;
