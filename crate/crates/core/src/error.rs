use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A surface or oracle produced a non-finite value.
    #[error("evaluation failed at {point:?}: {reason}")]
    Evaluation { point: Vec<f64>, reason: String },

    #[error("rbf fit failed (condition estimate {condition:.3e}): {reason}")]
    FitFailure { condition: f64, reason: String },

    #[error("not a saddle: smallest hessian eigenvalue {smallest_eigenvalue:.6e} at {point:?}")]
    NotASaddle {
        point: Vec<f64>,
        smallest_eigenvalue: f64,
    },

    #[error("stationary point at {point:?} has {negative} negative eigenvalues")]
    HigherIndexSaddle { point: Vec<f64>, negative: usize },

    #[error("no convergence after {iterations} iterations (gradient norm {gradient_norm:.3e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("network has no edges")]
    EmptyNetwork,

    #[error("roughness surface has no components")]
    EmptySurface,

    #[error("unsupported dimension {0}: grid export requires 2")]
    UnsupportedDimension(usize),

    #[error("parse error at {path}: {message}")]
    Parse { path: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("artifact {artifact} was produced by config {found}, expected {expected}")]
    ConfigMismatch {
        artifact: String,
        expected: String,
        found: String,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Parses JSON, reporting the JSON path of the first schema violation.
    pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
