use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("Gram matrix is not symmetric")]
    NotSymmetric,
    #[error("degenerate form")]
    Degenerate,
    #[error("form is not definite")]
    Indefinite,
    #[error("rescaling by zero")]
    ZeroScale,
    #[error("glue vector has non-integral pairing: {0}")]
    NonIntegralGlue(String),
    #[error("glue vector has odd norm: {0}")]
    OddGlue(String),
    #[error("undefined height contribution: {0}")]
    UndefinedContribution(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("unknown name: {0}")]
    Unknown(String),
    #[error("missing catalog data: {0}")]
    MissingCatalog(String),
    #[error("wrong signature: {0}")]
    WrongSignature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
