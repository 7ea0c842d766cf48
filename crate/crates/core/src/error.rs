use thiserror::Error;

pub type Result<T> = std::result::Result<T, PdpError>;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum PdpError {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid Gaussian model: {0}")]
    InvalidModel(String),

    #[error("index set must not be empty")]
    EmptySubset,

    #[error("tuple index {index} out of range for {n} tuples")]
    IndexOutOfRange { index: usize, n: usize },

    /// The conditioning event has probability zero (or below the exclusion threshold).
    #[error("conditioning event has zero probability")]
    ImpossibleCondition,

    #[error("tuple {0} has zero conditional variance")]
    DegenerateVariable(usize),

    #[error("tuple {0} does not have a binary domain")]
    NonBinaryDomain(usize),

    #[error("local sensitivity is zero")]
    ZeroSensitivity,

    #[error("candidate increment set is empty")]
    EmptyGamma,

    #[error("{what} with n = {n} exceeds the cap of {cap} (about {estimate:.3e} nodes); pass force to override")]
    SizeCap {
        what: &'static str,
        n: usize,
        cap: usize,
        estimate: f64,
    },

    #[error("known block of the covariance matrix is singular")]
    SingularConditioning,

    #[error("average correlation {requested} is not attainable; feasible range is ({min}, {max})")]
    InfeasibleCorrelation { requested: f64, min: f64, max: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PdpError {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            PdpError::SizeCap { .. } => 3,
            PdpError::SingularConditioning
            | PdpError::DegenerateVariable(_)
            | PdpError::Numerical(_) => 4,
            _ => 2,
        }
    }
}
