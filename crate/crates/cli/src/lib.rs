//! Command-line front end: TOML configuration, command runners and report files.

// `!(x <= tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;
use std::path::{Path, PathBuf};

pub mod config;
pub mod report;
pub mod run;

pub use config::{Command, Format, RunConfig};
pub use report::{emit_report, ReportBundle};
pub use run::run;

/// Environment variable naming the output directory when `--out` is absent.
pub const OUT_ENV: &str = "CONSTRAINT_MORSE_OUT";

/// Invalid or inconsistent configuration; exit status 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Passed = 0,
    Failed = 1,
    ConfigError = 2,
}

/// Output directory: flag, then environment, then config, then the working directory.
pub fn output_dir(flag: Option<&Path>, env: Option<PathBuf>, cfg: &RunConfig) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or(env)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Runs `command` and writes its report files to `dir`.
pub fn execute(command: Command, cfg: &RunConfig, format: Format, dir: &Path) -> Result<(ReportBundle, Vec<PathBuf>), ConfigError> {
    let bundle = run(command, cfg)?;
    let written = emit_report(&bundle, format, dir).map_err(|e| ConfigError(format!("{}: {e}", dir.display())))?;
    Ok((bundle, written))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_dir_precedence() {
        let mut cfg = RunConfig::default();
        cfg.output.dir = Some("cfg".into());
        assert_eq!(output_dir(Some(Path::new("flag")), Some("env".into()), &cfg), PathBuf::from("flag"));
        assert_eq!(output_dir(None, Some("env".into()), &cfg), PathBuf::from("env"));
        assert_eq!(output_dir(None, None, &cfg), PathBuf::from("cfg"));
        assert_eq!(output_dir(None, None, &RunConfig::default()), PathBuf::from("."));
    }
}
