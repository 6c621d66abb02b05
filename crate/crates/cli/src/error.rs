//! CLI errors with a stable exit-code contract:
//! 0 success, 2 input/config error, 3 data-shape error, 4 model-file error.

use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] tabstack::Error),

    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Core(e) => match e {
                tabstack::Error::Schema(_)
                | tabstack::Error::Row { .. }
                | tabstack::Error::Parameter(_)
                | tabstack::Error::Io(_) => 2,
                tabstack::Error::Shape(_) | tabstack::Error::SingleClass(_) => 3,
                tabstack::Error::Model(_) => 3,
                tabstack::Error::ModelFile(_) | tabstack::Error::ModelFileVersion { .. } => 4,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Core(tabstack::Error::Schema("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(tabstack::Error::Shape("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(tabstack::Error::SingleClass("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(tabstack::Error::ModelFile("x".into())).exit_code(), 4);
        assert_eq!(
            CliError::Core(tabstack::Error::ModelFileVersion { found: 2, expected: 1 })
                .exit_code(),
            4
        );
    }
}
