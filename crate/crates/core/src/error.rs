use thiserror::Error;

/// Errors surfaced by constructors, propagators and the optimizer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Parameter set violates a construction invariant.
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),

    /// Qubit state violates trace or positivity bounds.
    #[error("invalid qubit state: {0}")]
    InvalidState(String),

    /// Output time grid is unusable (empty, decreasing, or not starting at 0).
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    /// The aligned-level closed form was requested off alignment.
    #[error("closed form requires aligned levels (epsilon = 0), got epsilon = {epsilon:e}")]
    NonzeroDetuning { epsilon: f64 },

    /// A finite optimal window only exists for a moving qubit.
    #[error("static qubit: error decreases monotonically, no finite optimum")]
    StaticQubit,

    /// The step-halving certification could not reach the requested accuracy.
    #[error("step size underflow at t = {t:e}: requested local accuracy unreachable")]
    StepUnderflow { t: f64 },

    /// Probability leaked past the ladder truncation beyond the accepted bound.
    #[error(
        "truncation too small: lost mass {lost:e} exceeds {limit:e}, need n_max >= {required}"
    )]
    TruncationTooSmall {
        lost: f64,
        limit: f64,
        required: usize,
    },

    /// Counting-field transform size cannot hold the distribution.
    #[error("aliasing risk: transform size {m} too small ({detail})")]
    AliasingRisk { m: usize, detail: String },

    /// Charge variance went negative beyond tolerance.
    #[error("negative variance {var:e}: integrator inconsistency")]
    NegativeVariance { var: f64 },

    /// Measurement window must be strictly positive.
    #[error("measurement window must be positive, got dt = {dt:e}")]
    NonpositiveWindow { dt: f64 },

    /// The scanned minimum sits on the bracket edge.
    #[error("bracket miss: scanned minimum sits on the bracket edge at dt = {at:e}")]
    BracketMiss { at: f64 },

    /// Closed-form limit is singular for the given parameters.
    #[error("closed-form limit singular: {0}")]
    SingularLimit(String),
}

pub type Result<V> = std::result::Result<V, Error>;
