use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("duplicate eigenvalue {value} at positions {first} and {second}")]
    DuplicateEigenvalue {
        first: usize,
        second: usize,
        value: C64,
    },

    #[error("order must be at least 1")]
    ZeroOrder,

    #[error("order {requested} exceeds the available size {available}")]
    OrderTooLarge { requested: usize, available: usize },

    #[error("horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),

    #[error("spectrum is empty")]
    EmptySpectrum,

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not Hermitian (max |G_jk - conj(G_kj)| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error(
        "eigensolver did not converge after {sweeps} sweeps (off-diagonal mass {off_diagonal:e})"
    )]
    NoConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("Gram matrix of order {order} is numerically singular (gamma = {gamma:e}, gamma/|G| = {ratio:e})")]
    IllConditioned {
        order: usize,
        gamma: f64,
        ratio: f64,
    },

    #[error("input coefficient b_{index} is zero: b_j != 0 is necessary for solvability of the moment problem")]
    ZeroInput { index: usize },

    #[error("settling lag T = {settle_lag} must be nonnegative and smaller than t1 = {t1}")]
    InvalidHorizon { t1: f64, settle_lag: f64 },

    #[error("check order {check} is below the controlled order {controlled}")]
    CheckOrderTooSmall { check: usize, controlled: usize },

    #[error("spectrum is not closed under complex conjugation")]
    NotConjugateClosed,

    #[error("data are not conjugate-consistent at mode {index}")]
    NotConjugateConsistent { index: usize },

    #[error("control is not real: realness defect {defect:e} exceeds {tol:e}")]
    NonRealControl { defect: f64, tol: f64 },

    #[error("families have different horizons ({0} vs {1})")]
    HorizonMismatch(f64, f64),

    #[error("deviation ratio q = {q} is not below 1")]
    InadmissiblePerturbation { q: f64 },

    #[error("reference family is not strongly minimal at order {order} (verdict: {verdict})")]
    ReferenceNotStronglyMinimal { order: usize, verdict: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
