use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("temperature ordering violated{}: tmin {tmin} > tmax {tmax}", date.map(|d| format!(" on {d}")).unwrap_or_default())]
    Ordering {
        date: Option<NaiveDate>,
        tmin: f64,
        tmax: f64,
    },
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("coverage error: {0}")]
    Coverage(String),
    #[error("split error in {interval} interval: {reason}")]
    Split {
        interval: &'static str,
        reason: String,
    },
    #[error("screening failed: none of the {0} candidates produced a finite objective")]
    ScreeningFailure(usize),
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for filesystem failures, as opposed to rejected inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
