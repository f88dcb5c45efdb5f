use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("input is rational: {0}")]
    RationalInput(String),
    #[error("convergent table too short: {0}")]
    TableTooShort(String),
    #[error("degenerate rotation number: {0}")]
    DegenerateRotation(String),
    #[error("weight sequence missing or undefined: {0}")]
    WeightMissing(String),
    #[error("weight axiom violated: {0}")]
    AxiomViolation(String),
    #[error("no index satisfies the growth condition within depth {0}")]
    EmptyU(usize),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("closure membership undecided: {0}")]
    ClosureUndecided(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
