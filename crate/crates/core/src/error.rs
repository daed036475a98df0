use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A documented precondition on the inputs does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The fourth-order problem has no entire radial solution for N <= 2.
    #[error("N = {0}: the initial value problem admits no entire solution for N <= 2")]
    NoEntireSolution(u32),

    #[error("integration stalled at r = {r:e} (step {step:e}, {steps} steps taken)")]
    IntegrationStall { r: f64, step: f64, steps: usize },

    /// Shooting could not separate global from blow-up trajectories.
    #[error("inconclusive bracket [{low}, {high}] after {iterations} iterations (r_max = {r_max:e})")]
    InconclusiveBracket {
        low: f64,
        high: f64,
        iterations: usize,
        r_max: f64,
    },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("insufficient decay: {0}")]
    InsufficientDecay(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Precondition(_)
            | Error::NoEntireSolution(_)
            | Error::NotApplicable(_)
            | Error::Unsupported(_)
            | Error::Parse(_) => 2,
            Error::IntegrationStall { .. }
            | Error::InconclusiveBracket { .. }
            | Error::Inconclusive(_)
            | Error::InsufficientDecay(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
