use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid network dimensions m={m}, n={n}, ell={ell}: all must be at least 1")]
    InvalidDimensions { m: usize, n: usize, ell: usize },

    #[error("probability {name}={value} is outside its allowed range {range}")]
    ProbabilityOutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("pattern has {actual} flags but the network has {expected} relay nodes")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("bit strings have different lengths ({left} and {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("tamper plan names edge (row {row}, layer {layer}) which does not exist")]
    NoSuchEdge { row: usize, layer: usize },

    #[error("invalid key layout: {0}")]
    InvalidLayout(String),

    #[error("exact evaluation supports at most {max} nodes per city, got {n}")]
    StateSpaceTooLarge { n: usize, max: usize },

    #[error("{0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),
}
