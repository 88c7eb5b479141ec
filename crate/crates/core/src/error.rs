use thiserror::Error;

use crate::padic::PadicError;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error(transparent)]
    Padic(#[from] PadicError),
    #[error("series: {0}")]
    Series(String),
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("bad reduction at p = {p}: {reason}")]
    BadReduction { p: u64, reason: String },
    #[error("point is not on the curve: {0}")]
    NotOnCurve(String),
    #[error("points lie in different residue disks")]
    DifferentDisks,
    #[error("disk is not generic: {0}")]
    NotGeneric(String),
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("frobenius certification failed: {0}")]
    Certification(String),
    #[error("simplicity check failed: {0}")]
    Simplicity(String),
    #[error("truncation parameters out of range: {0}")]
    Truncation(String),
    #[error("annihilator: {0}")]
    Annihilator(String),
    #[error("inconsistent group data: {0}")]
    Group(String),
}

pub type Result<T> = std::result::Result<T, Error>;
