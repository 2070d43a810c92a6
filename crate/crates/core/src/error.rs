use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (u32, u32),
        found: (u32, u32),
    },

    #[error("malformed mask: {0}")]
    MalformedMask(String),

    #[error("flow file format error: {0}")]
    FlowFormat(String),

    #[error("flow data error: {0}")]
    FlowData(String),

    #[error("manifest field `{field}`: {message}")]
    Manifest { field: String, message: String },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("label map error: {0}")]
    LabelMap(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn manifest(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Manifest {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::MalformedMask(_) => "malformed_mask",
            Error::FlowFormat(_) => "flow_format",
            Error::FlowData(_) => "flow_data",
            Error::Manifest { .. } => "manifest",
            Error::InvalidWeights(_) => "invalid_weights",
            Error::LabelMap(_) => "label_map",
            Error::InvalidInput(_) => "invalid_input",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn check_dims(expected: (u32, u32), found: (u32, u32)) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
