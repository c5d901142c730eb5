use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum KrfError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("profile is not Kähler at rho = {rho}: {detail}")]
    NonKahlerProfile { rho: f64, detail: String },
    #[error("time step underflow at t = {t} (dt = {dt})")]
    CflFailure { t: f64, dt: f64 },
    #[error("singular time not reached after {steps} steps")]
    SingularTimeNotReached { steps: usize },
    #[error("surgery refused: {0}")]
    SurgeryRefused(String),
    #[error("config line {line}: {msg}")]
    ConfigInvalid { line: usize, msg: String },
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("mesh resolution: {0}")]
    MeshResolution(String),
    #[error("fit failure: {0}")]
    Fit(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed artifact {path}: {msg}")]
    Artifact { path: PathBuf, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl KrfError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            KrfError::InvalidParams(_) => "invalid_params",
            KrfError::NonKahlerProfile { .. } => "non_kahler_profile",
            KrfError::CflFailure { .. } => "cfl_failure",
            KrfError::SingularTimeNotReached { .. } => "singular_time_not_reached",
            KrfError::SurgeryRefused(_) => "surgery_refused",
            KrfError::ConfigInvalid { .. } => "config_invalid",
            KrfError::Quadrature(_) => "quadrature",
            KrfError::MeshResolution(_) => "mesh_resolution",
            KrfError::Fit(_) => "fit",
            KrfError::Io { .. } => "io",
            KrfError::Artifact { .. } => "artifact",
            KrfError::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, KrfError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> KrfError {
    let path = path.into();
    move |source| KrfError::Io { path, source }
}
