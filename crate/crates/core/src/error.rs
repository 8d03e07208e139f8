use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("range exceeded: {0}")]
    RangeExceeded(String),
    #[error("out of domain: {0}")]
    OutOfDomain(String),
    #[error("weight evaluation failed: {0}")]
    WeightEvaluation(String),
    #[error("no positive lower bound: {0}")]
    LowerBoundFailure(String),
    #[error("point outside sector: {0}")]
    OutOfSector(String),
    #[error("certification failed: {0}")]
    CertificationFailure(String),
    #[error("divergence detected: {0}")]
    DivergenceDetected(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("invalid kernel variant: {0}")]
    InvalidVariant(String),
    #[error("moment table exhausted: {0}")]
    TableExhausted(String),
    #[error("coefficients not in any class: {0}")]
    NotInClass(String),
    #[error("recovery failed at order {order}: {reason}")]
    RecoveryFailure { order: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidSequence(_)
                | Error::InvalidVariant(_)
                | Error::OutOfDomain(_)
                | Error::OutOfSector(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }

    pub fn is_certificate(&self) -> bool {
        matches!(
            self,
            Error::CertificationFailure(_) | Error::LowerBoundFailure(_) | Error::NotInClass(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
