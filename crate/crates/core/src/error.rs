//! Error types shared by the simulation modules.

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the model, fusion, and allocation code.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A point handed to the grid mapper lies outside the region of interest.
    #[error("point ({x}, {y}) lies outside the region of interest")]
    OutOfRegion { x: f64, y: f64 },

    /// Zero aggregate noise with non-zero signal power: the likelihood model
    /// would need an infinite SNR.
    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// A truncated series or quadrature failed to converge within its cap.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The requested mean-difference floor exceeds what any allocation can
    /// deliver.
    #[error(
        "infeasible allocation: mean-difference floor {demanded} exceeds the \
         achievable supremum {supremum}"
    )]
    Infeasible { demanded: f64, supremum: f64 },

    /// Interpolation target outside the observed curve range.
    #[error("extrapolation refused: target {target} outside observed range [{lo}, {hi}]")]
    ExtrapolationRefused { target: f64, lo: f64, hi: f64 },

    /// Experiment configuration problems (parse errors, unknown keys,
    /// inconsistent values).
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
