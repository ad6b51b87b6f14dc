use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("unknown calibration suite `{0}`")]
    UnknownSuite(String),

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("non-finite entry in table `{table}`, column `{column}`")]
    NonFinite { table: String, column: String },

    #[error(transparent)]
    Core(#[from] fracmap_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> LabError {
    LabError::Config {
        field,
        reason: reason.into(),
    }
}

pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> LabError {
    LabError::Io {
        path: path.display().to_string(),
        source,
    }
}
