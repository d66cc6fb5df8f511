use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum MotError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("tree size cap exceeded: {nodes} nodes > cap {cap}; try smaller (m, J) such as ({suggest_m}, {suggest_j})")]
    TreeSize {
        nodes: usize,
        cap: usize,
        suggest_m: u32,
        suggest_j: u32,
    },

    #[error("embedded history leaves the truncated tree at depth {depth}: {detail}")]
    OutOfTree { depth: usize, detail: String },

    #[error("LP solver failure: {0}")]
    Solver(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, MotError>;

impl MotError {
    pub fn domain(msg: impl Into<String>) -> Self {
        MotError::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        MotError::Config(msg.into())
    }
}
