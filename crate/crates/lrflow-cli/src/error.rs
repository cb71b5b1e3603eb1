use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Config { line: Option<usize>, msg: String },
    #[error(transparent)]
    Lib(#[from] lrflow::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv error in {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config { line: None, msg: msg.into() }
    }

    pub fn config_at(line: usize, msg: impl Into<String>) -> Self {
        CliError::Config { line: Some(line), msg: msg.into() }
    }

    /// 2 for configuration and input problems, 3 for numerical failures, 4 for resource limits.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } | CliError::Csv { .. } => 2,
            CliError::Lib(lrflow::Error::Domain(_)) => 2,
            CliError::Lib(lrflow::Error::Resource(_)) => 4,
            CliError::Lib(_) => 3,
        }
    }
}
