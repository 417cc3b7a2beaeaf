use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too small for requested N,K: {0}")]
    GridTooSmall(String),

    #[error("grid resolution mismatch: {0}")]
    Resolution(String),

    #[error("field lattices differ: radius {left} vs {right}")]
    LatticeMismatch { left: usize, right: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("integration blow-up at t = {time}")]
    Blowup { time: f64 },

    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("time grid mismatch: {0}")]
    TimeGridMismatch(String),

    #[error("N-K too small for temporal averaging (inverse factor {factor:.3e} >= 0.5)")]
    TransformSingular { factor: f64 },

    #[error(
        "(N,K) = ({n},{k}) is not admissible at eps = {eps}; run n-search and pick an admissible N"
    )]
    Inadmissible { n: u32, k: u32, eps: f64 },

    #[error("cone exit at t = {time}")]
    ConeExit { time: f64 },

    #[error("annulus N-K < a < N+K is empty for N = {n}, K = {k}")]
    EmptyAnnulus { n: u32, k: u32 },

    #[error(
        "{what} did not converge after {iterations} iterations (best residual {residual:.3e})"
    )]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("no graph convergence - check (N,K) admissibility (gaps: {gaps:?})")]
    NoGraphConvergence { gaps: Vec<f64> },

    #[error("dissipativity monitor violated: {0}")]
    MonitorViolated(String),

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("checkpoint: bad magic bytes {0:?}")]
    BadMagic([u8; 4]),

    #[error("checkpoint: unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checkpoint: coefficient count mismatch (header {expected}, payload {found})")]
    CountMismatch { expected: u64, found: u64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::GridTooSmall(_) => "grid_too_small",
            Error::Resolution(_) => "resolution",
            Error::LatticeMismatch { .. } => "lattice_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::Blowup { .. } => "blowup",
            Error::InvalidParameter { .. } => "invalid_parameter",
            Error::TimeGridMismatch(_) => "time_grid_mismatch",
            Error::TransformSingular { .. } => "transform_singular",
            Error::Inadmissible { .. } => "inadmissible",
            Error::ConeExit { .. } => "cone_exit",
            Error::EmptyAnnulus { .. } => "empty_annulus",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NoGraphConvergence { .. } => "no_graph_convergence",
            Error::MonitorViolated(_) => "monitor_violated",
            Error::ConfigParse(_) => "config_parse",
            Error::BadMagic(_) => "bad_magic",
            Error::VersionMismatch { .. } => "version_mismatch",
            Error::CountMismatch { .. } => "count_mismatch",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
