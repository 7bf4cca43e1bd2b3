use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid audio buffer: {0}")]
    InvalidAudio(String),
    #[error("signal too short: {len} samples, need at least {needed}")]
    SignalTooShort { len: usize, needed: usize },
    #[error("window/hop violates reconstruction condition")]
    NonCola,
    #[error("invalid cutoff: {cutoff} Hz at sample rate {sample_rate} Hz")]
    InvalidCutoff { cutoff: f64, sample_rate: u32 },
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("length mismatch: {0} vs {1} samples")]
    LengthMismatch(usize, usize),
    #[error("degenerate SNR reference")]
    DegenerateSnr,
    #[error("invalid region list: {0}")]
    InvalidRegions(String),
    #[error("invalid degradation spec: {0}")]
    InvalidSpec(String),
    #[error("insufficient speech for STOI")]
    InsufficientSpeech,
    #[error("silent reference")]
    SilentReference,
    #[error("incomparable reports: {0}")]
    IncomparableReports(String),
    #[error("no anchor samples")]
    NoAnchors,
    #[error("weight/layer count mismatch: {weights} weights for {layers} layers")]
    WeightLayerMismatch { weights: usize, layers: usize },
    #[error("unaligned feature streams: {0} vs {1} frames")]
    UnalignedStreams(usize, usize),
    #[error("invalid feature matrix: {0}")]
    InvalidFeatures(String),
    #[error("not a FEAT1 file")]
    NotFeat1,
    #[error("truncated feature file: expected {expected} bytes, found {found}")]
    TruncatedFeatures { expected: u64, found: u64 },
    #[error("feature file dimensions overflow: {0}")]
    DimensionOverflow(String),
    #[error("feature file has {0} trailing bytes")]
    TrailingFeatureBytes(u64),
    #[error("no input items in {0}")]
    NoInputItems(PathBuf),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("unknown enhancer: {0}")]
    UnknownEnhancer(String),
    #[error("adapter failure: {0}")]
    Adapter(String),
    #[error("unsupported WAV: {0}")]
    UnsupportedWav(String),
    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
