use thiserror::Error;

/// Errors reported by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Netlist or configuration values that cannot describe a device.
    #[error("configuration error: {0}")]
    Config(String),

    /// Graph-structure problems: missing loops, reused node pairs, etc.
    #[error("topology error: {0}")]
    Topology(String),

    /// The linearized potential has a negative curvature direction.
    #[error("unstable configuration: {0}")]
    Unstable(String),

    /// External flux beyond what the junction loop can support.
    #[error("flux too large: {0}")]
    FluxTooLarge(String),

    /// Perturbation theory or dispersive expansion used outside its range.
    #[error("invalid approximation: {0}")]
    Approximation(String),

    /// Near-resonant denominator in a dispersive or perturbative formula.
    #[error("resonance: {0}")]
    Resonance(String),

    /// A numerical routine did not converge.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Text or JSON input that could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
