use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("invalid UTF-8 input: {0}")]
    Utf8(#[from] std::str::Utf8Error),

    #[error("empty line rejected")]
    EmptyLine,

    #[error("{context}:{line}: {message}")]
    Parse { context: String, line: usize, message: String },

    #[error("line count mismatch: {} has {left_lines} lines but {} has {right_lines}", left.display(), right.display())]
    LineCountMismatch {
        left: PathBuf,
        left_lines: usize,
        right: PathBuf,
        right_lines: usize,
    },

    #[error("corpus has {available} pairs but {requested} were requested")]
    InsufficientData { available: usize, requested: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("alignment dimensions {found:?} do not match sentence pair {expected:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(context: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            line,
            message: message.into(),
        }
    }

    /// Wraps an error with the pipeline stage that produced it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 1 usage error, 2 data error, 3 internal error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 1,
            Error::Stage { source, .. } => source.exit_code(),
            Error::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => 2,
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}
