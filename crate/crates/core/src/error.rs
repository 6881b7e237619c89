use thiserror::Error;

#[derive(Debug, Error)]
pub enum JnccError {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible degree sequence: {0}")]
    InfeasibleDegrees(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("code construction failed: {0}")]
    Construction(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl JnccError {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            JnccError::Construction(_) | JnccError::InfeasibleDegrees(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, JnccError>;
