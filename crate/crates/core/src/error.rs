use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// An exact computation was refused because it exceeds a size cap.
    #[error("{what} = {requested} exceeds the {cap_name} cap of {cap}")]
    CapExceeded {
        what: &'static str,
        cap_name: &'static str,
        cap: u64,
        requested: u64,
    },

    #[error("config error at `{key}`: {constraint}")]
    Config { key: String, constraint: String },

    #[error("config parse error: {0}")]
    ConfigSyntax(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            constraint: constraint.into(),
        }
    }
}
