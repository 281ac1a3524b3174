use std::fmt;
use std::path::Path;

use blockipm::model::ModelError;

pub const EXIT_USAGE: u8 = 64;
pub const EXIT_PARSE: u8 = 65;
pub const EXIT_IO: u8 = 66;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or generator parameters.
    Usage(String),
    /// Unreadable MPS or instance JSON.
    Parse(String),
    Io(String),
    /// The solver could not run on an otherwise valid input.
    Solver(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// Maps a model error on `path` to the parse or usage class.
    pub fn model(path: &Path, e: ModelError) -> Self {
        let msg = format!("{}: {e}", path.display());
        match e {
            ModelError::BadParams(_) => CliError::Usage(msg),
            _ => CliError::Parse(msg),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Io(_) => EXIT_IO,
            CliError::Solver(_) => EXIT_NUMERICAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Parse(m) | CliError::Io(m) | CliError::Solver(m) => {
                f.write_str(m)
            }
        }
    }
}
