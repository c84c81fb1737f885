//! Channel maps, weighted aggregation and session summaries.
//!
//! Each channel map is piecewise linear between band anchors on the
//! `[0.4, 1.2]` score scale. Band edges are where the maps step down to the
//! next band; everything between them is linear interpolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::temporal::WindowStats;

pub const SCORE_MIN: f64 = 0.4;
pub const SCORE_MAX: f64 = 1.2;
pub const HIGH_THRESHOLD: f64 = 0.9;
pub const MEDIUM_THRESHOLD: f64 = 0.6;
pub const SMILE_BOOST: f64 = 1.2;

/// One value per behavioral channel. Used both for scores and for weighted
/// contributions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelScores {
    pub hand: f64,
    pub smile: f64,
    pub blink: f64,
    pub head: f64,
    pub lip: f64,
    pub gaze: f64,
}

impl ChannelScores {
    pub const fn uniform(v: f64) -> Self {
        Self {
            hand: v,
            smile: v,
            blink: v,
            head: v,
            lip: v,
            gaze: v,
        }
    }

    pub fn values(&self) -> [f64; 6] {
        [
            self.hand, self.smile, self.blink, self.head, self.lip, self.gaze,
        ]
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            hand: f(self.hand, other.hand),
            smile: f(self.smile, other.smile),
            blink: f(self.blink, other.blink),
            head: f(self.head, other.head),
            lip: f(self.lip, other.lip),
            gaze: f(self.gaze, other.gaze),
        }
    }
}

/// Raw channel weights. Defaults are the published table, which sums to
/// 0.85; totals are normalized by the sum at aggregation time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub hand: f64,
    pub smile: f64,
    pub lip: f64,
    pub blink: f64,
    pub head: f64,
    pub gaze: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            hand: 0.30,
            smile: 0.10,
            lip: 0.10,
            blink: 0.10,
            head: 0.15,
            gaze: 0.10,
        }
    }
}

impl Weights {
    pub fn as_channels(&self) -> ChannelScores {
        ChannelScores {
            hand: self.hand,
            smile: self.smile,
            blink: self.blink,
            head: self.head,
            lip: self.lip,
            gaze: self.gaze,
        }
    }

    pub fn sum(&self) -> f64 {
        self.hand + self.smile + self.lip + self.blink + self.head + self.gaze
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("weights.hand", self.hand),
            ("weights.smile", self.smile),
            ("weights.lip", self.lip),
            ("weights.blink", self.blink),
            ("weights.head", self.head),
            ("weights.gaze", self.gaze),
        ];
        for (key, w) in named {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::config(
                    key,
                    format!("weight must be finite and >= 0, got {w}"),
                ));
            }
        }
        if named.iter().all(|&(_, w)| w == 0.0) {
            return Err(Error::AllWeightsZero);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub weights: Weights,
    /// Longest lip stillness tolerated before the lip channel drops to 0.5.
    pub lip_stillness_ms: u64,
    /// Replace the smile channel by a 1.2x boost of the total whenever the
    /// smile fraction exceeds one half.
    pub smile_global_multiplier: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            weights: Weights::default(),
            lip_stillness_ms: 5_000,
            smile_global_multiplier: false,
        }
    }
}

fn lerp(x: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    y0 + (x - x0) / (x1 - x0) * (y1 - y0)
}

/// Hand channel from mean wrist speed in m/s; no hands reads as neutral 0.6.
pub fn score_hand(mean_speed: Option<f64>) -> Result<f64> {
    let Some(v) = mean_speed else {
        return Ok(0.6);
    };
    if !(v >= 0.0) {
        return Err(Error::NegativeSpeed(v));
    }
    Ok(if v <= 0.05 {
        0.6
    } else if v < 0.2 {
        lerp(v, 0.05, 0.2, 0.6, 0.9)
    } else if v <= 0.5 {
        1.2 - 2.0 * (v - 0.35).abs()
    } else if v <= 0.7 {
        lerp(v, 0.5, 0.7, 0.8, 0.6)
    } else {
        0.4
    })
}

pub fn score_smile(smile_fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&smile_fraction) {
        return Err(Error::OutOfRange {
            name: "smile_fraction",
            value: smile_fraction,
        });
    }
    Ok(0.6 + 0.6 * smile_fraction)
}

pub fn score_blink(rate_per_min: f64) -> Result<f64> {
    let r = rate_per_min;
    if !(r >= 0.0) {
        return Err(Error::NegativeRate(r));
    }
    Ok(if r <= 12.0 {
        1.0 - (r / 12.0) * 0.2
    } else if r <= 15.0 {
        lerp(r, 12.0, 15.0, 0.8, 0.6)
    } else {
        0.4
    })
}

pub fn score_head(deviation_fraction: f64) -> Result<f64> {
    let f = deviation_fraction;
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::OutOfRange {
            name: "head_deviation_fraction",
            value: f,
        });
    }
    Ok(if f <= 0.1 {
        1.0 - f
    } else if f <= 0.4 {
        lerp(f, 0.1, 0.4, 0.8, 0.6)
    } else {
        0.4
    })
}

/// Lip channel; `stillness_limit_ms` is 5000 by default.
pub fn score_lip(longest_still_ms: u64, activity_fraction: f64, stillness_limit_ms: u64) -> f64 {
    if longest_still_ms > stillness_limit_ms {
        0.5
    } else {
        (0.6 + 0.6 * activity_fraction.clamp(0.0, 1.0)).min(SCORE_MAX)
    }
}

pub fn score_gaze(shift_rate_per_min: f64) -> Result<f64> {
    let c = shift_rate_per_min;
    if !(c >= 0.0) {
        return Err(Error::NegativeRate(c));
    }
    Ok(if c <= 3.0 {
        1.2 - 0.1 * c
    } else if c <= 10.0 {
        lerp(c, 3.0, 10.0, 0.8, 0.6)
    } else {
        0.4
    })
}

pub fn score_channels(stats: &WindowStats, cfg: &ScoringConfig) -> Result<ChannelScores> {
    Ok(ChannelScores {
        hand: score_hand(stats.mean_hand_speed_mps)?,
        smile: score_smile(stats.smile_fraction)?,
        blink: score_blink(stats.blink_rate_per_min)?,
        head: score_head(stats.head_deviation_fraction)?,
        lip: score_lip(
            stats.lip_longest_still_ms,
            stats.lip_activity_fraction,
            cfg.lip_stillness_ms,
        ),
        gaze: score_gaze(stats.gaze_shift_rate_per_min)?,
    })
}

/// Per-channel `score * raw weight`, and their sum over the sum of weights.
pub fn aggregate(channels: &ChannelScores, weights: &Weights) -> Result<(ChannelScores, f64)> {
    let w = weights.as_channels();
    let total_weight = weights.sum();
    if !(total_weight > 0.0) {
        return Err(Error::AllWeightsZero);
    }
    let contributions = channels.zip_with(&w, |s, w| s * w);
    let total = contributions.values().iter().sum::<f64>() / total_weight;
    Ok((contributions, total))
}

/// Display percentage; totals above 1.0 saturate at 100.
pub fn to_percentage(weighted_total: f64) -> f64 {
    100.0 * weighted_total.min(1.0)
}

pub fn format_percentage(percentage: f64) -> String {
    format!("{percentage:.2}%")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    High,
    Medium,
    Low,
}

pub fn categorize(weighted_total: f64) -> Category {
    if weighted_total >= HIGH_THRESHOLD {
        Category::High
    } else if weighted_total >= MEDIUM_THRESHOLD {
        Category::Medium
    } else {
        Category::Low
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    pub t_ms: u64,
    pub channels: ChannelScores,
    pub contributions: ChannelScores,
    pub weighted_total: f64,
    pub percentage: f64,
    pub category: Category,
}

impl ConfidenceReport {
    pub fn from_channels(
        t_ms: u64,
        channels: ChannelScores,
        smile_fraction: f64,
        cfg: &ScoringConfig,
    ) -> Result<Self> {
        let (contributions, weighted_total) = if cfg.smile_global_multiplier {
            let weights = Weights {
                smile: 0.0,
                ..cfg.weights
            };
            let (contributions, total) = aggregate(&channels, &weights)?;
            let boosted = if smile_fraction > 0.5 {
                (total * SMILE_BOOST).min(SCORE_MAX)
            } else {
                total
            };
            (contributions, boosted)
        } else {
            aggregate(&channels, &cfg.weights)?
        };
        Ok(Self {
            t_ms,
            channels,
            contributions,
            weighted_total,
            percentage: to_percentage(weighted_total),
            category: categorize(weighted_total),
        })
    }

    pub fn from_stats(stats: &WindowStats, cfg: &ScoringConfig) -> Result<Self> {
        let channels = score_channels(stats, cfg)?;
        Self::from_channels(stats.t_ms, channels, stats.smile_fraction, cfg)
    }

    pub fn display_percentage(&self) -> String {
        format_percentage(self.percentage)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CategoryFractions {
    pub high: f64,
    pub medium: f64,
    pub low: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub duration_ms: u64,
    pub report_count: usize,
    pub mean_percentage: f64,
    pub min_percentage: f64,
    pub max_percentage: f64,
    pub mean_weighted_total: f64,
    pub mean_category: Category,
    pub time_in_category: CategoryFractions,
    pub total_blinks: usize,
    pub channel_means: ChannelScores,
}

/// Time-weighted running summary. Each report is weighted by the interval to
/// the next one; the last report reuses the preceding interval.
#[derive(Debug, Clone, Default)]
pub struct SummaryAccumulator {
    pending: Option<ConfidenceReport>,
    first_t: Option<u64>,
    last_interval: Option<u64>,
    count: usize,
    weight: f64,
    pct: f64,
    total: f64,
    min_pct: f64,
    max_pct: f64,
    by_category: CategoryFractions,
    channels: ChannelScores,
}

impl SummaryAccumulator {
    pub fn new() -> Self {
        Self {
            min_pct: f64::INFINITY,
            max_pct: f64::NEG_INFINITY,
            ..Default::default()
        }
    }

    fn fold(&mut self, report: &ConfidenceReport, w: f64) {
        self.weight += w;
        self.pct += w * report.percentage;
        self.total += w * report.weighted_total;
        self.min_pct = self.min_pct.min(report.percentage);
        self.max_pct = self.max_pct.max(report.percentage);
        match report.category {
            Category::High => self.by_category.high += w,
            Category::Medium => self.by_category.medium += w,
            Category::Low => self.by_category.low += w,
        }
        self.channels = self
            .channels
            .zip_with(&report.channels, |acc, s| acc + w * s);
    }

    pub fn push(&mut self, report: ConfidenceReport) {
        self.first_t.get_or_insert(report.t_ms);
        self.count += 1;
        if let Some(prev) = self.pending.take() {
            let dt = report.t_ms.saturating_sub(prev.t_ms);
            self.fold(&prev, dt as f64);
            self.last_interval = Some(dt);
        }
        self.pending = Some(report);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self, total_blinks: usize) -> Result<SessionSummary> {
        let last = self.pending.as_ref().ok_or(Error::EmptySession)?;
        let mut acc = self.clone();
        let tail = match self.last_interval {
            Some(dt) if dt > 0 => dt as f64,
            _ => 1.0,
        };
        acc.fold(last, tail);
        let w = acc.weight;
        let mean_weighted_total = acc.total / w;
        Ok(SessionSummary {
            duration_ms: last.t_ms - self.first_t.unwrap_or(last.t_ms),
            report_count: self.count,
            mean_percentage: acc.pct / w,
            min_percentage: acc.min_pct,
            max_percentage: acc.max_pct,
            mean_weighted_total,
            mean_category: categorize(mean_weighted_total),
            time_in_category: CategoryFractions {
                high: acc.by_category.high / w,
                medium: acc.by_category.medium / w,
                low: acc.by_category.low / w,
            },
            total_blinks,
            channel_means: acc
                .channels
                .zip_with(&ChannelScores::uniform(w), |s, w| s / w),
        })
    }
}

pub fn summarize(reports: &[ConfidenceReport], total_blinks: usize) -> Result<SessionSummary> {
    let mut acc = SummaryAccumulator::new();
    for r in reports {
        acc.push(r.clone());
    }
    acc.finish(total_blinks)
}
