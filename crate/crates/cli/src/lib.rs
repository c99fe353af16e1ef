//! Command implementations behind the `wftg` binary.

pub mod commands;
pub mod config;

pub use commands::{bench_report, BenchReport, Report};
pub use config::{Overrides, RunConfig, FORMAT_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("numerical divergence: {0}")]
    Divergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Input(_) => 2,
            CliError::Divergence(_) => 3,
        }
    }
}

impl From<wftg::Error> for CliError {
    fn from(e: wftg::Error) -> Self {
        match e {
            wftg::Error::NoConvergence { .. } | wftg::Error::NonFinite { .. } => {
                CliError::Divergence(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Verification(String::new()).exit_code(), 1);
        assert_eq!(CliError::from(wftg::Error::ZeroReference).exit_code(), 2);
        assert_eq!(
            CliError::from(wftg::Error::NonFinite { iteration: 3 }).exit_code(),
            3
        );
        let nc = wftg::Error::NoConvergence {
            what: "power iteration",
            iterations: 10,
        };
        assert_eq!(CliError::from(nc).exit_code(), 3);
    }
}
