use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("non-finite matrix entry in sector {sector}")]
    NonFinite { sector: usize },
    #[error("{routine} failed in sector {sector} with info = {info}")]
    Lapack {
        routine: &'static str,
        sector: usize,
        info: i32,
    },
    #[error("eigenvector for E = {energy} in sector {sector} did not converge (residual {residual:e})")]
    EigenvectorNotConverged {
        sector: usize,
        energy: f64,
        residual: f64,
    },
    #[error("state carries weight {weight:e} outside its own parity sector")]
    MixedParity { weight: f64 },
    #[error("integration step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("empty accessible region at epsilon = {epsilon}")]
    EmptyShell { epsilon: f64 },
    #[error("insufficient data: {0}")]
    Insufficient(String),
}

pub type Result<T> = std::result::Result<T, Error>;
