use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("search space of 2^{log2_size} assignments exceeds the budget of {budget}")]
    BudgetExceeded { log2_size: u32, budget: u64 },

    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown predicate `{0}`")]
    UnknownPredicate(String),

    #[error("predicate `{name}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },

    #[error("variable x{index} out of range (formula has {vars} variables)")]
    VariableOutOfRange { index: usize, vars: usize },

    #[error("predicate name `{0}` is declared twice")]
    SignatureClash(String),

    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid action table: {0}")]
    InvalidAction(String),

    #[error("density vector is not invariant under the action: {0}")]
    NotInvariant(String),

    #[error("model violates the theory: {0}")]
    AxiomViolation(String),

    #[error("invalid theon: {0}")]
    InvalidTheon(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("invalid parameter `{name}`: {msg}")]
    InvalidParam { name: String, msg: String },

    #[error("{0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::InvalidParam {
            name: name.into(),
            msg: msg.into(),
        }
    }
}
