use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {message}", path.display())]
    Syntax { path: PathBuf, message: String },
    #[error("{}: key `{key}`: {message}", path.display())]
    Invalid { path: PathBuf, key: String, message: String },
    #[error("{}: key `{key}`: {source}", path.display())]
    Module {
        path: PathBuf,
        key: String,
        #[source]
        source: tfwave::Error,
    },
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

impl CliError {
    /// 3 for numeric failures inside a module, 2 for everything the user can fix in the inputs.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Module { source, .. } if source.is_numeric() => 3,
            _ => 2,
        }
    }
}
