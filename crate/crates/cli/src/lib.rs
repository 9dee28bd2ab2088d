//! Configuration, orchestration and serialization behind the `conetip`
//! binary.

pub mod config;
pub mod output;
pub mod run;

pub use config::{parse_config, Format, RunConfig, Subcommand};
pub use output::write_results;
pub use run::{run_command, run_with_threads, BundleData, ResultBundle};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid-config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] conetip_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: conetip_core::Error,
    },
}

impl CliError {
    pub(crate) fn context(context: impl Into<String>) -> impl FnOnce(conetip_core::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Context { context, source }
    }
}
