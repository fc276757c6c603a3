use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] leo_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Parse { path: PathBuf, msg: String },
    #[error("{msg}")]
    Usage { msg: String, hint: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, msg: impl std::fmt::Display) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.to_string(),
        }
    }

    pub fn usage(msg: impl Into<String>, hint: impl Into<String>) -> Self {
        Error::Usage {
            msg: msg.into(),
            hint: hint.into(),
        }
    }

    /// Short stable name for scripts.
    pub fn kind(&self) -> &'static str {
        use leo_core::Error as C;
        match self {
            Error::Core(e) => match e {
                C::Shape { .. } => "shape",
                C::Domain(_) => "domain",
                C::Contract(_) => "contract",
                C::Lookup(_) => "lookup",
                C::Config(_) => "config",
                C::Sampling(_) => "sampling",
                C::Data { .. } => "data",
                C::Arity { .. } => "arity",
                C::Format(_) => "format",
                C::Divergence { .. } => "divergence",
            },
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Usage { .. } => "usage",
        }
    }

    pub fn hint(&self) -> Option<&str> {
        use leo_core::Error as C;
        match self {
            Error::Usage { hint, .. } => Some(hint),
            Error::Core(C::Arity { .. }) => {
                Some("concat and multi_arm models need exactly as many instructions as they were trained with")
            }
            Error::Core(C::Divergence { .. }) => Some("lower lr or clip"),
            Error::Core(C::Config(_)) => Some("check the config file and --set overrides"),
            _ => None,
        }
    }

    /// One JSON object on one line: `{"error": kind, "message": …, "hint": …}`.
    pub fn to_json_line(&self) -> String {
        let mut v = serde_json::json!({ "error": self.kind(), "message": self.to_string() });
        if let Some(h) = self.hint() {
            v["hint"] = h.into();
        }
        v.to_string()
    }
}
