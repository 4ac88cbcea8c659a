use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("chain needs at least 2 sites, got {0}")]
    TooFewSites(usize),
    #[error("expected {expected} longitudinal fields, got {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("gate is not unitary (max |U^dag U - 1| = {deviation:e})")]
    NonUnitary { deviation: f64 },
    #[error("bit-string has {found} bits, chain has {expected} sites")]
    BitStringLength { expected: usize, found: usize },
    #[error("bit value {0} is not 0 or 1")]
    InvalidBit(u8),
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("{sites} sites need {required_bytes} bytes, budget is {budget_bytes} bytes")]
    MemoryBudget {
        sites: usize,
        required_bytes: u128,
        budget_bytes: u128,
    },
    #[error("not at the dual-unitary point: J = {coupling}, b = {kick} (need pi/4)")]
    NotDualUnitary { coupling: f64, kick: f64 },
    #[error("operation does not support the {0} variant")]
    UnsupportedVariant(&'static str),
    #[error("moment order q = {0} not allowed here")]
    InvalidOrder(u32),
    #[error("time t = {0} not allowed here")]
    InvalidTime(u32),
    #[error("non-finite parameter: {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}
