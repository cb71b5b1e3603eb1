use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("tuning error: {0}")]
    Tuning(String),
    #[error("flow left the domain at scale {scale}: {reason}")]
    FlowLeftDomain { scale: usize, reason: String },
    #[error("extraction error: {0}")]
    Extraction(String),
    #[error("construction error: {0}")]
    Construction(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
