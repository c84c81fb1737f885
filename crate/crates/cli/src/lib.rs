//! Library half of the `poise` binary, shared with the integration tests.

pub mod server;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use poise_core::replay::replay;
use poise_core::{EngineConfig, Error, Outbound, SessionSummary};

pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Exit status for a failed command: configuration problems are 2,
/// everything else (bad input files, I/O, protocol) is 1.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<ConfigError>().is_some() {
        EXIT_CONFIG
    } else {
        EXIT_INPUT
    }
}

/// Marks a failure that happened while loading configuration, whatever its
/// underlying cause (a missing config file is a config error, not an input
/// error).
#[derive(Debug)]
pub struct ConfigError(pub Error);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

impl std::error::Error for ConfigError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.0)
    }
}

/// Built-in defaults when `path` is `None`.
pub fn load_config(path: Option<&Path>) -> anyhow::Result<EngineConfig> {
    match path {
        Some(p) => EngineConfig::load(p).map_err(|e| ConfigError(e).into()),
        None => Ok(EngineConfig::default()),
    }
}

/// Replays `file`, writing report lines to `out` (stdout when `None`). The
/// summary document is always written to stdout last.
pub fn run_replay(
    file: &Path,
    cfg: &EngineConfig,
    out: Option<&Path>,
) -> anyhow::Result<SessionSummary> {
    let input = BufReader::new(File::open(file).map_err(|e| Error::Io {
        path: file.into(),
        source: e,
    })?);
    let stdout = std::io::stdout();
    let summary = match out {
        Some(path) => {
            let f = File::create(path).map_err(|e| Error::Io {
                path: path.into(),
                source: e,
            })?;
            replay(input, cfg, BufWriter::new(f))?
        }
        None => replay(input, cfg, BufWriter::new(stdout.lock()))?,
    };
    let mut lock = stdout.lock();
    writeln!(lock, "{}", Outbound::Summary(summary.clone()).to_line())?;
    lock.flush()?;
    Ok(summary)
}
