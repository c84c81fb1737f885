//! Golden replay of the calm 60 s session.
//!
//! The 26 MB session file (`poise synth --preset calm --duration 60 --fps 30`)
//! is regenerated from the seeded synthesizer rather than checked in; its
//! hash is pinned so any drift in the generator shows up
//! here before it shows up as a changed trace. Set `UPDATE_GOLDEN=1` to
//! rewrite the trace after an intentional change.

use std::path::PathBuf;

use poise_core::replay::replay;
use poise_core::{BenchProfile, Category, EngineConfig, Outbound, Preset};
use sha2::{Digest, Sha256};

const FIXTURE_SHA256: &str = "ead255c7d2fca3d7a7c267efbd1ceab70f6a631a031bfe9311028dfb84ac2856";

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/calm_60s.reports.ndjson")
}

fn fixture() -> Vec<u8> {
    BenchProfile::new(Preset::Calm, 60.0, 30.0)
        .write_session(Vec::new())
        .unwrap()
}

#[test]
fn fixture_is_pinned() {
    let digest = hex::encode(Sha256::digest(fixture()));
    if FIXTURE_SHA256.is_empty() || std::env::var_os("UPDATE_GOLDEN").is_some() {
        eprintln!("calm_60s sha256 = {digest}");
    }
    assert_eq!(digest, FIXTURE_SHA256);
}

#[test]
fn replay_matches_golden_trace() {
    let input = fixture();
    let cfg = EngineConfig::default();
    let mut first = Vec::new();
    let mut second = Vec::new();
    replay(&input[..], &cfg, &mut first).unwrap();
    replay(&input[..], &cfg, &mut second).unwrap();
    assert_eq!(first, second, "replay is not byte-deterministic");

    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), &first).unwrap();
    }
    let golden = std::fs::read(golden_path()).unwrap();
    assert!(
        first == golden,
        "replay output differs from the golden trace"
    );
}

/// First five reports checked channel by channel against the script: during
/// the lead-in nobody blinks, smiles, looks away or turns, lips move every
/// frame and the wrist moves at 0.3 m/s.
#[test]
fn first_reports_match_the_script() {
    let golden = std::fs::read_to_string(golden_path()).unwrap();
    for (k, line) in golden.lines().take(5).enumerate() {
        let Outbound::Report { report, timing } = Outbound::parse(line).unwrap() else {
            panic!("line {k} is not a report");
        };
        assert!(timing.is_none());
        assert_eq!(
            report.t_ms,
            ((30 + k) as f64 * 1000.0 / 30.0).round() as u64
        );
        let c = report.channels;
        assert_eq!(
            (c.blink, c.head, c.gaze, c.lip, c.smile),
            (1.0, 1.0, 1.2, 1.2, 0.6)
        );
        // 1.2 - 2|0.3 - 0.35|, up to 1e-6 coordinate rounding
        assert!((c.hand - 1.1).abs() < 1e-3, "hand {}", c.hand);
        let total =
            (0.30 * c.hand + 0.10 * 0.6 + 0.10 * 1.2 + 0.10 * 1.0 + 0.15 * 1.0 + 0.10 * 1.2) / 0.85;
        assert!((report.weighted_total - total).abs() < 1e-12);
        assert_eq!(report.percentage, 100.0);
        assert_eq!(report.category, Category::High);
    }
}
