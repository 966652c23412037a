use thiserror::Error;

/// Everything that can go wrong while building chains, flows or reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("transition matrix is not stochastic: {0}")]
    NonStochastic(String),

    #[error("a chain needs at least two states, got {0}")]
    TooFewStates(usize),

    #[error("stationary distribution is not unique (null space of P^T - I has dimension > 1)")]
    SingularStationary,

    #[error("stationary distribution is not strictly positive (state {state} has mass {mass:e})")]
    NonPositiveStationary { state: usize, mass: f64 },

    #[error("chain is not irreducible")]
    NotIrreducible,

    #[error("chain is not ergodic (reducible or periodic)")]
    NotErgodic,

    #[error("chain is not reversible with respect to its stationary distribution")]
    NotReversible,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("stationary distributions differ (max abs difference {max_diff:e})")]
    StationaryMismatch { max_diff: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    EigenNoConverge { sweeps: usize, off_norm: f64 },

    #[error("chain has {n} states; exhaustive conductance is limited to {max}")]
    TooLarge { n: usize, max: usize },

    #[error("epsilon must lie in [1e-12, 1), got {0}")]
    InvalidEpsilon(f64),

    #[error("delta must lie in (0, 1/2), got {0}")]
    BadDelta(f64),

    #[error("mixing did not reach the target distance within {cap} steps")]
    NoConvergence { cap: u64 },

    #[error("total variation distance increased from {before:e} to {after:e} at t = {time}")]
    MonotonicityViolation { time: f64, before: f64, after: f64 },

    #[error("state index {index} out of range for a chain with {n} states")]
    StateOutOfRange { index: usize, n: usize },

    #[error("invalid flow: {0}")]
    InvalidFlow(String),

    #[error("kappa is infinite: edge ({from}, {to}) has no common two-step neighbourhood")]
    KappaInfinite { from: usize, to: usize },

    #[error("loop erasure broke flow conservation: {0}")]
    NotSimplifiable(String),

    #[error("spreading would produce more than {limit} paths")]
    FlowTooLarge { limit: usize },

    #[error("no odd-length path from {from} to {to} (odd flow impossible)")]
    NoOddPath { from: usize, to: usize },

    #[error("state {to} is unreachable from {from}")]
    Unreachable { from: usize, to: usize },

    #[error("flow is routed over the wrong base chain: {0}")]
    WrongFlowBase(String),

    #[error("bad generator parameters: {0}")]
    BadParams(String),

    #[error("unknown state label {0:?}")]
    UnknownState(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
