use thiserror::Error;

use recomb_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("state cap exceeded: {0}")]
    Cap(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 2 config, 3 numerical, 4 cap; i/o failures share 1.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Cap(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::CapExceeded { .. } => CliError::Cap(e.to_string()),
            CoreError::PositivityViolated { .. } => CliError::Numerical(e.to_string()),
            e => CliError::Config(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let cap = CoreError::CapExceeded { size: 10, cap: 4 };
        assert_eq!(CliError::from(cap).exit_code(), 4);
        let pos = CoreError::PositivityViolated {
            time: 1.0,
            index: 0,
            value: -1.0,
        };
        assert_eq!(CliError::from(pos).exit_code(), 3);
        assert_eq!(CliError::from(CoreError::NoSites).exit_code(), 2);
    }
}
