//! Usage statistics, circle-size summaries, and the variability index.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::ingest::EgoTimeline;
use crate::layering::LayeringError;
use crate::model::{circle_sizes, circle_sizes_padded, Channel, LayeredEgoNetwork};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("usage statistics need a positive span")]
    ZeroSpan,
    #[error("population summary needs at least 2 networks, got {0}")]
    InsufficientSample(usize),
    #[error("variability index undefined for a zero mean")]
    UndefinedC,
    #[error("confidence level must lie strictly between 0 and 1")]
    BadConfidence,
}

impl From<LayeringError> for StatsError {
    fn from(_: LayeringError) -> Self {
        StatsError::ZeroSpan
    }
}

/// Neumaier compensated summation; keeps aggregation order effects far below
/// the 1e-9 relative bound the reports promise.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut compensation = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(values: &[f64]) -> f64 {
    let m = mean(values);
    let ss = compensated_sum(values.iter().map(|v| (v - m) * (v - m)));
    (ss / (values.len() as f64 - 1.0)).sqrt()
}

/// Two-sided standard-normal quantile for the given confidence level
/// (1.959964 at 95%).
pub fn z_value(confidence: f64) -> Result<f64, StatsError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::BadConfidence);
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf((1.0 + confidence) / 2.0))
}

/// Mean, normal-approximation CI half-width, and the variability index
/// C = full CI width / mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSummary {
    pub mean: f64,
    pub ci_half_width: f64,
    pub c_index: f64,
    pub n: usize,
}

pub fn mean_summary(values: &[f64], z: f64) -> Result<MeanSummary, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::InsufficientSample(values.len()));
    }
    let m = mean(values);
    if m == 0.0 {
        return Err(StatsError::UndefinedC);
    }
    let half = z * sample_sd(values) / (values.len() as f64).sqrt();
    Ok(MeanSummary { mean: m, ci_half_width: half, c_index: 2.0 * half / m, n: values.len() })
}

/// Per-ego direct-communication usage profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageStats {
    pub ego_id: String,
    /// Percent of tweets that are direct.
    pub pct_social: f64,
    pub pct_reply: f64,
    pub pct_mention: f64,
    pub pct_retweet: f64,
    /// First-to-second highest of the three direct percentages; `None` when
    /// fewer than two direct channels were ever used.
    pub fs_ratio: Option<f64>,
    /// Tweets (plain + direct) per day over the full span.
    pub tweet_freq: f64,
}

/// First/second highest of the three direct-tweet shares. Scale-invariant:
/// counts and percentages give the same ratio.
pub fn fs_ratio(reply: f64, mention: f64, retweet: f64) -> Option<f64> {
    let mut shares = [reply, mention, retweet];
    shares.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (shares[1] > 0.0).then(|| shares[0] / shares[1])
}

/// Computes the usage profile of one timeline.
///
/// Tweets are deduplicated by id first, so a mention reaching several alters
/// counts once.
pub fn usage_stats(timeline: &EgoTimeline) -> Result<UsageStats, StatsError> {
    if timeline.last_ts <= timeline.first_ts {
        return Err(StatsError::ZeroSpan);
    }
    let mut channel_by_tweet: BTreeMap<&str, Channel> = BTreeMap::new();
    for event in &timeline.events {
        channel_by_tweet.entry(&event.tweet_id).or_insert(event.channel);
    }
    let total = channel_by_tweet.len();
    let mut counts = [0usize; 4]; // reply, mention, retweet, plain
    for channel in channel_by_tweet.values() {
        let i = match channel {
            Channel::Reply => 0,
            Channel::Mention => 1,
            Channel::Retweet => 2,
            Channel::Plain => 3,
        };
        counts[i] += 1;
    }
    let direct = counts[0] + counts[1] + counts[2];
    let pct = |num: usize, den: usize| {
        if den == 0 { 0.0 } else { num as f64 * 100.0 / den as f64 }
    };
    let span_days = (timeline.last_ts - timeline.first_ts).num_seconds() as f64 / 86_400.0;
    Ok(UsageStats {
        ego_id: timeline.ego_id.clone(),
        pct_social: pct(direct, total),
        pct_reply: pct(counts[0], direct),
        pct_mention: pct(counts[1], direct),
        pct_retweet: pct(counts[2], direct),
        fs_ratio: fs_ratio(counts[0] as f64, counts[1] as f64, counts[2] as f64),
        tweet_freq: total as f64 / span_days,
    })
}

/// Column means over a set of usage rows (the "mean row" of a usage table).
/// The F-S mean is taken over rows where the ratio is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageMeans {
    pub pct_social: f64,
    pub pct_reply: f64,
    pub pct_mention: f64,
    pub pct_retweet: f64,
    pub fs_ratio: Option<f64>,
    pub tweet_freq: f64,
    pub n: usize,
}

pub fn usage_means(rows: &[UsageStats]) -> UsageMeans {
    let col = |f: fn(&UsageStats) -> f64| {
        compensated_sum(rows.iter().map(f)) / rows.len() as f64
    };
    let fs: Vec<f64> = rows.iter().filter_map(|r| r.fs_ratio).collect();
    UsageMeans {
        pct_social: col(|r| r.pct_social),
        pct_reply: col(|r| r.pct_reply),
        pct_mention: col(|r| r.pct_mention),
        pct_retweet: col(|r| r.pct_retweet),
        fs_ratio: (!fs.is_empty()).then(|| mean(&fs)),
        tweet_freq: col(|r| r.tweet_freq),
        n: rows.len(),
    }
}

/// Ratios between adjacent circle sizes: `|C2|/|C1| .. |C5|/|C4|`.
pub fn scaling_ratios(sizes: &[usize; 5]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for i in 0..4 {
        out[i] = sizes[i + 1] as f64 / sizes[i] as f64;
    }
    out
}

/// Population-level circle-size and scaling-ratio summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub circle_sizes: [MeanSummary; 5],
    pub scaling_ratios: [MeanSummary; 4],
    /// Networks that entered the aggregate.
    pub n_networks: usize,
    /// Networks skipped for having fewer than five rings.
    pub n_degenerate_skipped: usize,
    pub confidence: f64,
}

/// Aggregates circle sizes and scaling ratios over a population of networks.
///
/// Networks with `k_used < 5` are skipped by default; with
/// `include_degenerate` their missing circles repeat the total alter count.
pub fn population_summary(
    networks: &[LayeredEgoNetwork],
    confidence: f64,
    include_degenerate: bool,
) -> Result<PopulationSummary, StatsError> {
    let z = z_value(confidence)?;
    let mut sizes: Vec<[usize; 5]> = Vec::new();
    let mut skipped = 0;
    for net in networks {
        match circle_sizes(net) {
            Ok(s) => sizes.push(s),
            Err(_) if include_degenerate => sizes.push(circle_sizes_padded(net)),
            Err(_) => skipped += 1,
        }
    }
    if sizes.len() < 2 {
        return Err(StatsError::InsufficientSample(sizes.len()));
    }
    let size_summary = |i: usize| {
        let values: Vec<f64> = sizes.iter().map(|s| s[i] as f64).collect();
        mean_summary(&values, z)
    };
    let ratio_summary = |i: usize| {
        let values: Vec<f64> = sizes.iter().map(|s| scaling_ratios(s)[i]).collect();
        mean_summary(&values, z)
    };
    Ok(PopulationSummary {
        circle_sizes: [
            size_summary(0)?,
            size_summary(1)?,
            size_summary(2)?,
            size_summary(3)?,
            size_summary(4)?,
        ],
        scaling_ratios: [
            ratio_summary(0)?,
            ratio_summary(1)?,
            ratio_summary(2)?,
            ratio_summary(3)?,
        ],
        n_networks: sizes.len(),
        n_degenerate_skipped: skipped,
        confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::build_timeline;
    use crate::model::InteractionEvent;
    use chrono::{DateTime, Utc};

    #[test]
    fn z_matches_the_reference_value() {
        assert!((z_value(0.95).unwrap() - 1.959964).abs() < 1e-6);
        assert!(z_value(1.0).is_err());
    }

    #[test]
    fn fs_ratio_from_table_rows() {
        // David Cameron: replies 1.98, mentions 87.43, retweets 10.59.
        let fs = fs_ratio(1.98, 87.43, 10.59).unwrap();
        assert!((fs - 8.26).abs() < 0.01);
        // Andrzej Duda: 46.59 / 4.26 / 49.15.
        let fs = fs_ratio(46.59, 4.26, 49.15).unwrap();
        assert!((fs - 1.05).abs() < 0.01);
        // Equal top shares.
        assert_eq!(fs_ratio(40.0, 40.0, 20.0), Some(1.0));
        // Only one channel ever used.
        assert_eq!(fs_ratio(10.0, 0.0, 0.0), None);
    }

    #[test]
    fn fs_ratio_is_scale_invariant() {
        let a = fs_ratio(12.0, 5.0, 33.0).unwrap();
        let b = fs_ratio(1200.0, 500.0, 3300.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    #[test]
    fn usage_stats_dedupes_multi_alter_tweets() {
        let t0 = ts("2015-01-01T00:00:00Z");
        let mut events = Vec::new();
        // One mention tweet reaching two alters, one reply, two plain tweets.
        for alter in ["a", "b"] {
            events.push(
                InteractionEvent::new("m1", "ego", Some(alter.into()), Channel::Mention, t0, vec![])
                    .unwrap(),
            );
        }
        events.push(
            InteractionEvent::new(
                "r1",
                "ego",
                Some("a".into()),
                Channel::Reply,
                t0 + chrono::Duration::days(1),
                vec![],
            )
            .unwrap(),
        );
        for (i, d) in [2i64, 4].iter().enumerate() {
            events.push(
                InteractionEvent::new(
                    format!("p{i}"),
                    "ego",
                    None,
                    Channel::Plain,
                    t0 + chrono::Duration::days(*d),
                    vec![],
                )
                .unwrap(),
            );
        }
        let stats = usage_stats(&build_timeline(events).unwrap()).unwrap();
        // 4 distinct tweets, 2 direct.
        assert!((stats.pct_social - 50.0).abs() < 1e-12);
        assert!((stats.pct_mention - 50.0).abs() < 1e-12);
        assert!((stats.pct_reply - 50.0).abs() < 1e-12);
        assert_eq!(stats.fs_ratio, Some(1.0));
        assert!((stats.tweet_freq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaling_ratios_match_printed_tables() {
        let close = |got: [f64; 4], want: [f64; 4]| {
            got.iter().zip(want).all(|(g, w)| (g - w).abs() < 0.05)
        };
        assert!(close(scaling_ratios(&[1, 6, 15, 48, 107]), [6.0, 2.5, 3.2, 2.23]));
        assert!(close(scaling_ratios(&[2, 4, 14, 46, 111]), [2.0, 3.5, 3.29, 2.41]));
        assert_eq!(scaling_ratios(&[1, 1, 1, 1, 1]), [1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn mean_summary_closed_form() {
        let s = mean_summary(&[1.0, 2.0, 3.0], z_value(0.95).unwrap()).unwrap();
        assert!((s.mean - 2.0).abs() < 1e-12);
        assert!((s.ci_half_width - 1.1316).abs() < 1e-3);
        assert!((s.c_index - 1.1316).abs() < 1e-3);
    }

    #[test]
    fn c_index_is_zero_without_variance_and_scale_invariant() {
        let z = z_value(0.95).unwrap();
        let s = mean_summary(&[4.0, 4.0, 4.0, 4.0], z).unwrap();
        assert_eq!(s.c_index, 0.0);
        let a = mean_summary(&[1.0, 2.0, 5.0], z).unwrap();
        let b = mean_summary(&[8.0, 16.0, 40.0], z).unwrap();
        assert!((a.c_index - b.c_index).abs() < 1e-12);
    }

    #[test]
    fn population_summary_needs_two_networks() {
        assert_eq!(
            population_summary(&[], 0.95, false).unwrap_err(),
            StatsError::InsufficientSample(0)
        );
    }
}
