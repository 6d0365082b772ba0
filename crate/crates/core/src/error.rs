use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, label ranges or class sets that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// Invalid hyperparameters, unknown scenario, missing regularizer state.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("empty evaluation: no examples left after filtering by classes {classes:?}")]
    EmptyEvaluation { classes: Vec<usize> },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("missing accuracy records for a_{{{task},{eval_task}}}: rounds {rounds:?}")]
    MissingRecords {
        task: usize,
        eval_task: usize,
        rounds: Vec<usize>,
    },

    #[error("{}: {message}", location(.file, *.line))]
    Ingestion {
        file: PathBuf,
        line: Option<usize>,
        message: String,
    },

    #[error("data exhausted for class {class}{}: requested {requested}, remaining {remaining}", round_suffix(*.round))]
    DataExhaustion {
        class: usize,
        round: Option<usize>,
        requested: usize,
        remaining: usize,
    },

    #[error("training diverged (non-finite loss) in round {round}, epoch {epoch}")]
    Divergence { round: usize, epoch: usize },

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn location(file: &std::path::Path, line: Option<usize>) -> String {
    match line {
        Some(l) => format!("ingestion error at {}:{}", file.display(), l),
        None => format!("ingestion error in {}", file.display()),
    }
}

fn round_suffix(round: Option<usize>) -> String {
    round.map(|r| format!(" in round {r}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn ingestion(
        file: impl Into<PathBuf>,
        line: Option<usize>,
        msg: impl Into<String>,
    ) -> Self {
        Error::Ingestion {
            file: file.into(),
            line,
            message: msg.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 2,
            Error::Ingestion { .. } => 3,
            Error::Numeric(_) | Error::Divergence { .. } => 4,
            Error::DataExhaustion { .. } => 5,
            _ => 1,
        }
    }
}
