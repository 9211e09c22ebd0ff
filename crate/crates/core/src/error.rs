use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("trace line {line}: {msg}")]
    TraceParse { line: usize, msg: String },

    #[error("stream {stream} is not time-ordered at position {position}")]
    UnsortedStream { stream: usize, position: usize },

    #[error("invalid workload preset `{label}`: {msg}")]
    Preset { label: String, msg: String },

    /// `line` is 1-based; 0 when the value did not come from a file.
    #[error("config {}key `{key}`: {msg}", at_line(*line))]
    Config { line: usize, key: String, msg: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!("line {line}: ")
    }
}
