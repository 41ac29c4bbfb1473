use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("structure check failed: {what} (defect {defect:.3e}, tolerance {tol:.1e})")]
    Structure {
        what: &'static str,
        defect: f64,
        tol: f64,
    },

    #[error("eigensolver failed on {dim}x{dim} matrix (max |entry| {max_abs:.3e}, unitarity defect {unitarity:.3e})")]
    Eigen {
        dim: usize,
        max_abs: f64,
        unitarity: f64,
    },

    #[error("resonant denominator at {} pair(s), first {:?}", pairs.len(), pairs.first())]
    Resonance { pairs: Vec<(usize, usize)> },

    #[error("matrix file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
