use thiserror::Error;

/// Errors raised by estimators, population integrals and experiment drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AteError {
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("overlap violation at unit {unit}: propensity {propensity} outside ({epsilon}, 1 - {epsilon})")]
    OverlapViolation {
        unit: usize,
        propensity: f64,
        epsilon: f64,
    },

    #[error("cell {cell} has no {arm} units")]
    EmptyCellArm { cell: String, arm: &'static str },

    #[error("covariate value {0} was not seen while fitting")]
    EmptySupport(String),

    #[error("propensity fit failed: {0}")]
    FitFailure(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("degenerate denominator: excess variance {excess} is within {multiple} standard errors ({std_error}) of zero")]
    DegenerateDenominator {
        excess: f64,
        std_error: f64,
        multiple: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl AteError {
    /// True for failures of numerical procedures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            AteError::FitFailure(_)
                | AteError::SingularDesign(_)
                | AteError::DegenerateDenominator { .. }
                | AteError::DegenerateDesign(_)
                | AteError::EmptyCellArm { .. }
        )
    }
}

impl From<std::io::Error> for AteError {
    fn from(err: std::io::Error) -> Self {
        AteError::Io(err.to_string())
    }
}

pub type Result<T, E = AteError> = std::result::Result<T, E>;
