use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("node index {index} out of bounds for {n} nodes")]
    Bounds { index: usize, n: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("class {class} has {have} labelled nodes, {need} required")]
    InsufficientLabels {
        class: usize,
        have: usize,
        need: usize,
    },

    #[error("insufficient edges: {0}")]
    InsufficientEdges(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("stale cache: built for graph {found:016x}, expected {expected:016x}")]
    StaleCache { expected: u64, found: u64 },

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
