use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid offspring distribution: {0}")]
    InvalidDistribution(String),

    #[error("argument {x} is outside [0, 1]")]
    OutOfDomain { x: f64 },

    #[error("cannot parse `{literal}`: {reason}")]
    Literal { literal: String, reason: String },

    #[error("fixed-point iteration for {map} did not converge after {iterations} steps (last iterate {last})")]
    NonConvergence {
        map: String,
        iterations: usize,
        last: f64,
        /// Last few iterates, oldest first.
        trace: Vec<f64>,
    },

    #[error("sampled tree exceeded the node budget of {budget}")]
    TreeTooLarge { budget: usize },

    #[error("order parameter is not bracketed on [{lo}, {hi}]: {reason}")]
    NotBracketed { lo: f64, hi: f64, reason: String },

    #[error("order-parameter predicate is not monotone on [{lo}, {hi}]; scan the subintervals separately")]
    NonMonotone { lo: f64, hi: f64 },

    #[error("draw probability is positive ({draw}); the two-type forcing construction needs a draw-free distribution")]
    DrawPositive { draw: f64 },

    #[error("time limit reached after {completed} of {requested} samples")]
    TimeLimit { completed: usize, requested: usize },

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
