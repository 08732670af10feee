use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NessError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The shell target sits on a band edge where the group velocity vanishes.
    #[error("energy shell at band edge (target {target}, gamma {gamma})")]
    BandEdge { target: f64, gamma: f64 },

    #[error("ambiguous Liouvillean spectrum: differences {a} and {b} are closer than the grouping tolerance")]
    AmbiguousSpectrum { a: f64, b: f64 },

    #[error("{0} is not an eigenvalue of the system Liouvillean")]
    NotAnEigenvalue(f64),

    #[error("not applicable: {0}")]
    NotApplicable(&'static str),

    #[error("tan(k/2) has a pole at k = {0}")]
    Pole(f64),

    #[error("site {0} lies outside the covariance window")]
    WindowTooSmall(i64),

    #[error("quadrature did not reach tolerance on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64 },
}

impl NessError {
    /// True for failures of the numerical machinery rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            NessError::BandEdge { .. } | NessError::QuadratureFailure { .. } | NessError::Pole(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, NessError>;

pub(crate) fn invalid(msg: impl Into<String>) -> NessError {
    NessError::InvalidParameter(msg.into())
}
