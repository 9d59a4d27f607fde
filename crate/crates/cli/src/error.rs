use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or invalid configuration, overrides or dataset.
    #[error("{0}")]
    Config(String),

    #[error("stage '{stage}' failed: {source}")]
    Runtime {
        stage: String,
        #[source]
        source: stackga_core::Error,
    },

    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime { .. } | CliError::Output(_) => 1,
        }
    }

    pub fn runtime(stage: &str) -> impl FnOnce(stackga_core::Error) -> CliError + '_ {
        move |source| CliError::Runtime { stage: stage.to_string(), source }
    }
}
