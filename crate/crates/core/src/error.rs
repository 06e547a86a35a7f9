use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("silence: no analysis frame rises above the endpoint threshold")]
    Silence,
    #[error("framing error: {0}")]
    Framing(String),
    #[error("filter design error: {0}")]
    Design(String),
    #[error("feature config error: {0}")]
    Config(String),
    #[error("delta error: {frames} frames cannot support a delta window of {window}")]
    Delta { frames: usize, window: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("model init error: {0}")]
    Init(String),
    #[error("training error: {0}")]
    Training(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("weight error: {0}")]
    Weight(String),
    #[error("vote error: {0}")]
    Vote(String),
    #[error("metric error: {0}")]
    Metric(String),
    #[error("index {index} out of range for {len} scores")]
    Index { index: usize, len: usize },
    #[error("GA config error: {0}")]
    GaConfig(String),
    #[error("state error: {0}")]
    State(String),
    #[error("clip source: {0}")]
    Source(String),
    #[error("band {band}, speaker {speaker}: {source}")]
    Context {
        band: usize,
        speaker: u32,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn context(self, band: usize, speaker: u32) -> Self {
        Error::Context {
            band,
            speaker,
            source: Box::new(self),
        }
    }

    /// Strips [`Error::Context`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
