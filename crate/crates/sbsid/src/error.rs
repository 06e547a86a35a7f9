use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] sbsid_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: unsupported audio format: {detail}")]
    Format { path: PathBuf, detail: String },
    #[error("{path}: {channels} channels, only mono audio is accepted")]
    Channels { path: PathBuf, channels: u16 },
    #[error("{path}: {detail}")]
    Csv { path: PathBuf, detail: String },
    #[error("config: {0}")]
    Config(String),
    #[error("model store {path}: {detail}")]
    Store { path: PathBuf, detail: String },
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn store(path: impl Into<PathBuf>, detail: impl Into<String>) -> Error {
        Error::Store {
            path: path.into(),
            detail: detail.into(),
        }
    }
}
