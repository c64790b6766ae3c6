use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("depth {depth} exceeds length {len} of segment {index}")]
    DepthExceedsLength { depth: usize, len: usize, index: usize },

    #[error("inputs are not collectively persistently exciting of order {required}")]
    InsufficientExcitation { required: usize },

    #[error("insufficient data: rank {rank} < required {required}")]
    InsufficientData { rank: usize, required: usize },

    #[error("no usable data: {0}")]
    NoUsableData(String),

    #[error("order undetermined: {0}")]
    OrderUndetermined(String),

    #[error("order infeasible: Hankel rank {rank} < requested order {order}")]
    OrderInfeasible { rank: usize, order: usize },

    #[error("past window inconsistent with data (relative residual {residual:.3e} > {tol:.1e})")]
    InconsistentPast { residual: f64, tol: f64 },

    #[error("Riccati iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    RiccatiDivergence { iterations: usize, residual: f64 },

    #[error("Riccati solution is not stabilizing (closed-loop spectral radius {radius:.6})")]
    NotStabilizing { radius: f64 },

    #[error(
        "certification failed: max eigenvalue of L(P) is {lmi_max_eig:.3e} (scale {scale:.3e}, tol {tol:.1e})"
    )]
    CertificationFailed { lmi_max_eig: f64, scale: f64, tol: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Innermost error, skipping pipeline-stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
