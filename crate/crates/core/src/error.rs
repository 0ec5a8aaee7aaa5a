use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("direction cosine {0} outside [-1, 1]")]
    Domain(f64),

    #[error("delay {tau:e} s outside the unambiguous window [0, {window:e}) s")]
    DelayRange { tau: f64, window: f64 },

    #[error("DFT length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("waveform has zero energy")]
    ZeroEnergy,

    #[error("schedule kind {0} requires geometry")]
    MissingGeometry(&'static str),

    #[error("snapshot set already contains noise")]
    AlreadyNoisy,

    #[error("singular Fisher information; null direction {null_direction:?}")]
    SingularFim { null_direction: [f64; 4] },

    #[error("total element count {0} too small for the requested split")]
    SplitTooSmall(usize),

    #[error("MUSIC needs at least two sensors, got {0}")]
    InsufficientAperture(usize),

    #[error("waveform spectrum is identically zero")]
    DegenerateWaveform,

    #[error("estimated IRS-target delay {0:e} s is negative")]
    Causality(f64),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
