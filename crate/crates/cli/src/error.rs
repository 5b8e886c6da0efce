use lpembed_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or unreadable input. Exit code 2.
    #[error("{0}")]
    Validation(String),
    /// The computation itself failed. Exit code 3.
    #[error("{stage}: {source}")]
    Numerical {
        stage: &'static str,
        #[source]
        source: CoreError,
    },
    /// A post-run check such as `--verify` did not hold. Exit code 3.
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical { .. } | CliError::Check(_) => 3,
        }
    }

    /// Wraps a core error, tagging numerical failures with the stage that raised them.
    pub fn from_core(stage: &'static str, err: CoreError) -> Self {
        if err.is_validation() {
            return CliError::Validation(format!("{stage}: {err}"));
        }
        let stage = match err {
            CoreError::SnowflakeConstruction { .. } => "snowflake",
            CoreError::BarrierBreakdown { .. } | CoreError::NoAdmissibleVector { .. } => "sparsify",
            CoreError::EigenNoConvergence => "eigensolver",
            _ => stage,
        };
        CliError::Numerical { stage, source: err }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Validation(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Validation(format!("json: {err}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
