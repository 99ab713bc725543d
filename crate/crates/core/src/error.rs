use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum FsiError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("mesh tangled: cell {cell} has Jacobian determinant {det:e}")]
    MeshTangled { cell: usize, det: f64 },

    #[error("{solver} did not converge in {iterations} iterations (residual {residual:e})")]
    SolverFailure {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("instability detected at step {step}: {reason}")]
    Instability { step: usize, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("problem too large for explicit assembly: {dofs} dofs (limit {limit})")]
    TooLarge { dofs: usize, limit: usize },

    #[error("singular matrix in direct solver at pivot {0}")]
    Singular(usize),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FsiError {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            FsiError::Config(_) | FsiError::Parse { .. } | FsiError::Checkpoint(_) => 1,
            FsiError::SolverFailure { .. }
            | FsiError::Singular(_)
            | FsiError::DimensionMismatch { .. }
            | FsiError::TooLarge { .. } => 2,
            FsiError::Instability { .. } | FsiError::MeshTangled { .. } => 3,
            FsiError::Io(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, FsiError>;
