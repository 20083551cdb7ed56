use thiserror::Error;

/// Errors produced by the vortex laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("corrupted connection: total flux / 2π = {flux_over_2pi} is not within 1e-8 of an integer")]
    CorruptedConnection { flux_over_2pi: f64 },

    #[error("configuration components live on different meshes")]
    MeshMismatch,

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("snapshot checksum mismatch: file has {stored}, rebuilt mesh has {computed}")]
    ChecksumMismatch { stored: String, computed: String },

    #[error("unsupported snapshot format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("truncated or malformed snapshot: {0}")]
    Truncated(String),

    #[error("verdict requires a converged minimizer (gradient norm {grad_norm:e} > tolerance {tolerance:e})")]
    Unconverged { grad_norm: f64, tolerance: f64 },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code: 1 for validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CorruptedConnection { .. }
            | Error::NonConvergence { .. }
            | Error::Unconverged { .. } => 2,
            _ => 1,
        }
    }

    /// Short machine-readable tag used in the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMesh(_) => "invalid-mesh",
            Error::CorruptedConnection { .. } => "corrupted-connection",
            Error::MeshMismatch => "mesh-mismatch",
            Error::NonConvergence { .. } => "non-convergence",
            Error::Config(_) => "invalid-config",
            Error::ChecksumMismatch { .. } => "checksum-mismatch",
            Error::VersionMismatch { .. } => "version-mismatch",
            Error::Truncated(_) => "truncated-snapshot",
            Error::Unconverged { .. } => "unconverged",
            Error::Invalid(_) => "invalid-argument",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
