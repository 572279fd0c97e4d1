use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A run or apparatus configuration violates one of its invariants.
    /// The message names the violated constraint.
    #[error("configuration error: {0}")]
    Config(String),

    /// A non-finite value appeared in the field arrays.
    #[error("numerical blow-up at step {step}, t = {time:.4}, cell ({ix}, {iy})")]
    BlowUp {
        step: u64,
        time: f64,
        ix: usize,
        iy: usize,
    },

    /// The particle (or its deposition stencil) left the usable interior of
    /// the grid.
    #[error("particle escaped the domain interior at ({x:.3}, {y:.3}), t = {time:.4}")]
    ParticleEscaped { x: f64, y: f64, time: f64 },

    /// A field sample or deposit was requested outside the grid interior.
    #[error("position ({x:.3}, {y:.3}) outside the grid interior")]
    OutOfDomain { x: f64, y: f64 },

    /// A trajectory window was too short or too noisy to extract a steady
    /// state from.
    #[error("not equilibrated: {0}")]
    NotEquilibrated(String),

    /// A statistics operation was given too little or degenerate data.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    TomlParse(#[from] toml::de::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed {what} at line {line}: {msg}")]
    Csv {
        what: &'static str,
        line: usize,
        msg: String,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
