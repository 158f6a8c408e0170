//! Experiment runner for the `hyperdyn` command line tool.

pub mod config;
pub mod experiments;
pub mod oracle;
pub mod report;
pub mod verify;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("report: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] hyperdyn::Error),
}
