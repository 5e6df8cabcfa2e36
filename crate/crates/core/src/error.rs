use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A value violated a type invariant. `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("outside transmon regime: effective Josephson energy is {e_j} MHz")]
    OutsideTransmonRegime { e_j: f64 },

    #[error("series boundary z=1 (symmetric SQUID); use the time-average oracle instead")]
    SeriesBoundary,

    #[error("{function} did not converge after {terms} terms")]
    NonConvergence {
        function: &'static str,
        terms: usize,
    },

    #[error("{function}: argument {arg} outside domain")]
    Domain { function: &'static str, arg: f64 },

    #[error("non-physical network: {0}")]
    NonPhysicalNetwork(String),

    #[error("singular Jacobian at the optimum; parameters are not identifiable")]
    SingularJacobian,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
