use crate::lattice::Site;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("site ({}, {}) is not a member of the box", site.j, site.n)]
    SiteOutsideBox { site: Site },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("dense assembly refused: {sites} sites exceeds the limit of {limit}")]
    TooLargeForDense { sites: usize, limit: usize },

    #[error("resolvent singular: smallest singular value {gap:e} of E - H^cc is below tolerance {tol:e}")]
    ResolventSingular { gap: f64, tol: f64 },

    #[error(
        "resonance collision: restricted operator singular at E = {energy:e} (pivot {pivot:e})"
    )]
    ResonanceCollision { energy: f64, pivot: f64 },

    #[error("newton iteration failed to contract at iteration {iteration}: ratio {ratio:.3e}")]
    NonContraction { iteration: usize, ratio: f64 },

    #[error("linear solve residual {residual:e} exceeds {tol:e}")]
    InaccurateSolve { residual: f64, tol: f64 },

    #[error("factorization failed: zero pivot at row {row}")]
    SingularFactor { row: usize },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("eigenpair could not be classified: {0}")]
    Unclassifiable(String),

    #[error("basis incomplete: completeness defect {defect:e} exceeds {limit:e}")]
    IncompleteBasis { defect: f64, limit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
