use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("Bessel argument {x} outside the validated range")]
    BesselRange { x: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("root bracketing exhausted, last interval [{lo}, {hi}]")]
    BracketExhausted { lo: f64, hi: f64 },
}
