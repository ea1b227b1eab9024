use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("arity mismatch for {rel}: expected {expected}, found {found}")]
    Arity { rel: String, expected: usize, found: usize },
    #[error("unsafe variable {var} in {item}")]
    Unsafe { var: String, item: String },
    #[error("unknown {kind} {name}")]
    Unknown { kind: &'static str, name: String },
    #[error("enumeration exceeds the cap of {cap} {what}")]
    CapExceeded { cap: usize, what: &'static str },
    #[error("refused: {0}")]
    Refused(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("chase failed: key violation on {0}")]
    ChaseConflict(String),
}

pub type Result<T> = std::result::Result<T, Error>;
