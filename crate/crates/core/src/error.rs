use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("degenerate expression: {0}")]
    DegenerateExpression(String),

    #[error("cyclic substitution bindings involving `{0}`")]
    CyclicBindings(String),

    #[error("denominator vanishes at the evaluation point")]
    Pole,

    #[error("symbol `{0}` is not bound at the evaluation point")]
    Unbound(String),

    #[error("jet order {order} exceeds the configured bound {bound}")]
    OrderOverflow { order: u32, bound: u32 },

    #[error("relation is nonlinear in its leading jet `{0}`")]
    NonlinearLeading(String),

    #[error("no solvable leading jet: {0}")]
    NoLeadingJet(String),

    #[error("operator is not linear in lam: {0}; rewrite the pair in a lam-linear form first")]
    NotLambdaLinear(String),

    #[error("invalid Lax pair: {0}")]
    InvalidLaxPair(String),

    #[error("degenerate pair: {0}")]
    DegeneratePair(String),

    #[error("wrong unknown: {0}")]
    WrongUnknown(String),

    #[error("invalid ansatz basis: {0}")]
    InvalidBasis(String),

    #[error("branch bound {bound} exceeded with {unresolved} unresolved branches")]
    BranchLimit { bound: usize, unresolved: usize },

    #[error("reduction exceeded the time limit of {0} s")]
    Timeout(u64),

    #[error("{line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("{0}")]
    Usage(String),
}
