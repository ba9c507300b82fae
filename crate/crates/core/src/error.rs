use std::path::PathBuf;

use crate::event::Polarity;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("roi {roi} does not fit inside a {width}x{height} sensor")]
    RoiOutsideSensor {
        roi: String,
        width: u32,
        height: u32,
    },

    #[error("degenerate polarity channel: no {0} events, focusing cannot proceed")]
    DegenerateChannel(Polarity),

    #[error("log undefined: nonpositive intensity {value} at ({x}, {y})")]
    LogUndefined { x: usize, y: usize, value: f64 },

    #[error("invalid wavelet filter bank '{name}': {reason}")]
    InvalidFilter { name: String, reason: String },

    #[error("unknown wavelet '{0}'")]
    UnknownWavelet(String),

    #[error("{0}")]
    Parse(String),

    #[error("bad magic bytes, expected EVAF")]
    BadMagic,

    #[error("unsupported EVAF version {0}")]
    UnsupportedVersion(u16),

    #[error("truncated event file: expected {expected} bytes, got {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("time {t_us} us is outside calibrated window [{first}, {last}]")]
    OutsideCalibration { t_us: f64, first: f64, last: f64 },

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
