use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("p must be an odd prime (got {0})")]
    NotOddPrime(u64),

    #[error("modulus {0} exceeds the supported 63-bit range")]
    ModulusTooLarge(u64),

    #[error("degree must be at least 1")]
    ZeroDegree,

    #[error("polynomial {0} is not square-free")]
    NotSquareFree(String),

    #[error("work estimate {needed} exceeds enumeration budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse polynomial: {0}")]
    Parse(String),

    #[error("eigenvalue iteration did not converge after {0} iterations")]
    NonConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
