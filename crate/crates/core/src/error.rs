use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:.3e} below tolerance)")]
    NotPsd { eigenvalue: f64 },

    #[error("eigendecomposition did not converge")]
    NoConvergence,

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("channel count mismatch: system has {system}, bath has {bath}")]
    ChannelMismatch { system: usize, bath: usize },

    #[error("time {0} is outside the tabulated correlation grid")]
    OutsideGrid(f64),

    #[error("scheme {scheme} is only defined for t = infinity")]
    TimeIndependentOnly { scheme: String },

    #[error("secular limit is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    SecularNotPsd { min_eigenvalue: f64 },

    #[error("coarse-graining search failed: {0}")]
    CoarseGraining(String),

    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },

    #[error("integration exceeded {steps} steps at t = {t}")]
    TooManySteps { steps: usize, t: f64 },

    #[error("cubic roots are degenerate (min separation {separation:.3e}); use the amplitude ODE reference instead")]
    DegenerateRoots { separation: f64 },

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
}
