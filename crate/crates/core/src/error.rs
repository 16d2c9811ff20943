use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    Arch(String),

    #[error("layer `{layer}`: {msg}")]
    Shape { layer: String, msg: String },

    #[error("layer `{layer}`: unsupported layer kind for {what}")]
    UnsupportedKind { layer: String, what: &'static str },

    #[error("layer `{layer}`: value {value} does not fit {bits}-bit {role}")]
    Precision {
        layer: String,
        role: &'static str,
        value: i32,
        bits: u8,
    },

    #[error("accumulator overflow: partial sum {0} does not fit 32 bits")]
    Overflow(i64),

    #[error("cascade: {0} slices is outside 1..=16 or does not divide the row")]
    Cascade(usize),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("layers `{prev}` and `{next}` are incompatible: {msg}")]
    Incompatible {
        prev: String,
        next: String,
        msg: String,
    },

    #[error("profile: {0}")]
    Profile(String),

    #[error("energy: {0}")]
    Energy(String),

    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(layer: &str, msg: impl Into<String>) -> Self {
        Error::Shape {
            layer: layer.to_string(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
