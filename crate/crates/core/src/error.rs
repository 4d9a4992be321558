use std::path::PathBuf;

/// Errors raised anywhere in the extraction, training and evaluation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("wav decode error in {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("expected 2 channels, found {0} (mono up-mix must be enabled explicitly)")]
    ChannelCount(u16),

    #[error("silent input")]
    SilentInput,

    #[error("clip has {len} samples, shorter than one window of {window}")]
    TooShort { len: usize, window: usize },

    #[error("sample rate {sample_rate} Hz cannot represent the {top_hz:.1} Hz band edge")]
    SampleRateTooLow { sample_rate: u32, top_hz: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("song {song_id}: {source}")]
    Song {
        song_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("dataset format error: {0}")]
    Format(String),

    #[error("feature length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("model schema {model} does not match feature schema {features}")]
    SchemaMismatch { model: String, features: String },

    #[error("invalid training data: {0}")]
    Training(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("evaluation protocol infeasible: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn for_song(self, song_id: &str) -> Self {
        Error::Song {
            song_id: song_id.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
