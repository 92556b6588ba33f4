use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("labels: {0}")]
    Labels(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate ANOVA: all observations are identical")]
    DegenerateAnova,

    #[error("SVM solver did not converge (max KKT violation {max_violation:e})")]
    SvmNotConverged { max_violation: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("gene {gene_id}: {source}")]
    Gene {
        gene_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
