use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not an odd prime in the supported range")]
    InvalidPrime(u64),
    #[error("value is zero at precision {precision}; valuation undetermined")]
    ZeroAtPrecision { precision: u32 },
    #[error("element is not a unit")]
    NotAUnit,
    #[error("-1 is a square modulo {0}; no d with d^2+1 a non-square is needed")]
    MinusOneIsSquare(u64),
    #[error("insufficient precision: need {needed}, have {have}")]
    InsufficientPrecision { needed: u32, have: u32 },
    #[error("precision too low: need N >= {needed}, have {have}")]
    PrecisionTooLow { needed: u32, have: u32 },
    #[error("change of basis is singular at working precision")]
    SingularChangeOfBasis,
    #[error("unknown lemma id `{0}`")]
    UnknownLemma(String),
    #[error("unknown shape id `{0}`")]
    UnknownShape(String),
    #[error("profile entries never settle into a geometric tail of ratio +-1/q")]
    NoGeometricTail,
    #[error("tail continuation hits a pole at m = {0}")]
    Pole(i64),
    #[error("class is not theta-regular: {0}")]
    NotThetaRegular(String),
    #[error("operation not defined for class kind {0}")]
    WrongKind(String),
    #[error("the trivial square class does not define a quadratic character")]
    TrivialCharacter,
    #[error("isotropy checks disagree (hasse: {hasse}, search: {search})")]
    IsotropyMismatch { hasse: bool, search: bool },
    #[error("no catalog shape matches the form invariants {0}")]
    NoCatalogMatch(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("mismatched prime or precision in residue arithmetic")]
    Mismatch,
}

pub type Result<T> = std::result::Result<T, Error>;
