use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QsError {
    #[error("matrix is not Hermitian (relative deviation {deviation:.3e})")]
    NonHermitianInput { deviation: f64 },

    #[error("eigensolver did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("function undefined on spectrum: {0}")]
    DomainError(String),

    #[error("norm {norm:.3e} exceeds bound {bound:.3e}")]
    Overflow { norm: f64, bound: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue pair ({i}, {j}) sums to {sum:.3e}")]
    SingularPairing { i: usize, j: usize, sum: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("qome mapping needs beta_p = m^2 w^2 beta_q (got {beta_p} vs {scaled_beta_q})")]
    OffBisector { beta_p: f64, scaled_beta_q: f64 },

    #[error("trace drifted to {trace} at step {step}")]
    TraceDrift { step: usize, trace: f64 },

    #[error("standard error {stderr:.3e} exceeds limit {limit:.3e}")]
    InsufficientSamples { stderr: f64, limit: f64 },

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),
}

pub type Result<T> = std::result::Result<T, QsError>;
