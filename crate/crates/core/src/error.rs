use thiserror::Error;

pub type Result<T> = std::result::Result<T, QptError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QptError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit count {n} outside the supported range 1..={cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("input is not Hermitian (residual {residual:e})")]
    NonHermitianInput { residual: f64 },

    #[error("trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("Fano coefficient {index} = {value} lies outside [-1, 1]")]
    CoefficientOutOfRange { index: usize, value: f64 },

    #[error("Kraus operators are not complete (residual {residual:e})")]
    IncompleteKraus { residual: f64 },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("parameter {name} = {value} outside {range}")]
    ParamOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("preparation matrix is singular (condition number {condition:e})")]
    SingularBasis { condition: f64 },

    #[error("missing shot table for state {state}, setting {setting}")]
    MissingSetting { state: usize, setting: String },

    #[error("fit family {family} expects {expected} qubit(s), process has {actual}")]
    WrongDimension {
        family: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("input {name} = {value} outside [-1, 1]")]
    InputOutOfRange { name: &'static str, value: f64 },

    #[error("invalid Pauli label {0:?}")]
    InvalidLabel(String),

    #[error("invalid input: {0}")]
    Parse(String),
}

impl QptError {
    /// True for errors caused by a channel description that does not define a
    /// physical (CPTP) map.
    pub fn is_nonphysical(&self) -> bool {
        matches!(
            self,
            QptError::IncompleteKraus { .. }
                | QptError::NotUnitary { .. }
                | QptError::ParamOutOfRange { .. }
        )
    }

    /// True for numerical failures of the reconstruction itself.
    pub fn is_numerical(&self) -> bool {
        matches!(self, QptError::SingularBasis { .. })
    }
}
