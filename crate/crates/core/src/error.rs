use num_complex::Complex64;
use thiserror::Error;

use crate::expr::ExprError;
use crate::ode::OdeError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("singular point at {at}: {what}")]
    Singular { at: Complex64, what: &'static str },
    #[error("point {0} lies outside the domain")]
    OutOfDomain(Complex64),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
