use thiserror::Error;

/// Errors surfaced by the solver and analysis layers.
#[derive(Debug, Error)]
pub enum QgError {
    #[error("grid size {n} invalid: n must be a power of two and at least 8")]
    BadGridSize { n: usize },

    #[error("box length {len} invalid: must be finite and positive")]
    BadBoxLength { len: f64 },

    #[error("lattice mismatch: {left} vs {right}")]
    LatticeMismatch { left: String, right: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("semigroup time {t} is negative")]
    NegativeTime { t: f64 },

    #[error(
        "exponential guard tripped at t={time}: weight exponent {exponent:.3} on shell |k|_1={shell} exceeds cap {cap}"
    )]
    ExpOverflow {
        time: f64,
        shell: f64,
        exponent: f64,
        cap: f64,
    },

    #[error("field is not Hermitian-symmetric: relative asymmetry {err:.3e} exceeds {tol:.3e}")]
    NotHermitian { err: f64, tol: f64 },

    #[error("field mean {mean:.3e} is not zero (tolerance {tol:.3e})")]
    MeanNotZero { mean: f64, tol: f64 },

    #[error("grid with n={n} hosts only {levels} dyadic levels; at least 3 are required")]
    FrameTooSmall { n: usize, levels: usize },

    #[error("CFL violation at t={time:.6}: dt={dt:.3e} exceeds limit {dt_max:.3e} (max |v| = {max_speed:.3e})")]
    CflViolation {
        time: f64,
        dt: f64,
        dt_max: f64,
        max_speed: f64,
    },

    #[error("blow-up guard tripped at t={time:.6}: |theta|_inf = {linf:.3e} exceeds {bound:.3e}")]
    BlowUp { time: f64, linf: f64, bound: f64 },

    #[error("fixed-point iteration is not contracting: residuals grew over iterations {history:?}")]
    NonContraction { history: Vec<f64> },

    #[error("weighted-norm exponents rejected:\n{}", .violations.join("\n"))]
    BadNormSpec { violations: Vec<String> },

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type QgResult<T> = Result<T, QgError>;
