//! Offline scoring of recorded session files.

use std::io::{BufRead, Write};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::landmark::SessionReader;
use crate::scoring::{ConfidenceReport, SessionSummary};
use crate::session::{Session, Step};
use crate::wire::Outbound;

/// Scores every frame of `input` and writes one `report` line per emitted
/// report to `out`. The first bad line aborts the replay with its line number.
///
/// Output carries no timing fields, so the same file and config always give
/// the same bytes.
pub fn replay<R: BufRead, W: Write>(
    input: R,
    cfg: &EngineConfig,
    mut out: W,
) -> Result<SessionSummary> {
    let io = |e| Error::io("<output>", e);
    let mut session = Session::new(cfg.clone());
    for (line, frame) in SessionReader::new(input).map_err(|e| e.at_line(1))? {
        let step = frame
            .and_then(|f| session.process(f))
            .map_err(|e| e.at_line(line))?;
        if let Step::Report(report) = step {
            writeln!(out, "{}", Outbound::report(report, None).to_line()).map_err(io)?;
        }
    }
    out.flush().map_err(io)?;
    session.summary()
}

/// Replays into memory and returns the emitted reports.
pub fn replay_reports<R: BufRead>(
    input: R,
    cfg: &EngineConfig,
) -> Result<(Vec<ConfidenceReport>, SessionSummary)> {
    let mut buf = Vec::new();
    let summary = replay(input, cfg, &mut buf)?;
    let reports = buf
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .map(
            |l| match Outbound::parse(std::str::from_utf8(l).expect("utf-8 output"))? {
                Outbound::Report { report, .. } => Ok(report),
                other => Err(Error::MalformedRecord(format!("unexpected {other:?}"))),
            },
        )
        .collect::<Result<_>>()?;
    Ok((reports, summary))
}
