use thiserror::Error;

use crate::cnf::Var;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimacs line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("variable {var} outside 1..={num_vars}")]
    VarOutOfRange { var: i64, num_vars: u32 },

    #[error("variable {0} is unassigned")]
    Unassigned(Var),

    #[error("clause bound k={bound} is below the longest clause ({observed})")]
    ClauseBound { bound: usize, observed: usize },

    #[error("refusing exhaustive enumeration over {n} variables (limit {limit})")]
    TooManyVars { n: usize, limit: usize },

    #[error("clause of length {len} exceeds the supported maximum {max}")]
    ClauseTooLong { len: usize, max: usize },

    #[error("struct over {n} variables exceeds the enumeration cap of {cap}")]
    StructTooLarge { n: usize, cap: usize },

    #[error("struct library line {line}: {msg}")]
    Library { line: usize, msg: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("strategy {strategy} is not supported for k={k}")]
    Unsupported { strategy: String, k: usize },

    #[error("median of an even number of runs ({0})")]
    EvenRunCount(usize),

    #[error("universe of size {size} is too large to enumerate (limit {limit})")]
    UniverseTooLarge { size: String, limit: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
