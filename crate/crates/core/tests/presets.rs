use poise_core::bench::run_bench;
use poise_core::{BenchProfile, Category, EngineConfig, Preset};

fn summary(preset: Preset) -> poise_core::SessionSummary {
    run_bench(
        &BenchProfile::new(preset, 60.0, 30.0),
        &EngineConfig::default(),
    )
    .unwrap()
    .summary
}

#[test]
fn presets_land_in_their_designed_category() {
    for (preset, want) in [
        (Preset::Calm, Category::High),
        (Preset::Nervous, Category::Low),
        (Preset::Distracted, Category::Medium),
    ] {
        let s = summary(preset);
        eprintln!(
            "{preset}: {:.4} {:?}",
            s.mean_weighted_total, s.channel_means
        );
        assert_eq!(s.mean_category, want, "{preset}: {s:?}");
    }
}

#[test]
fn presets_are_deterministic() {
    for preset in Preset::ALL {
        assert_eq!(summary(preset), summary(preset));
    }
}
