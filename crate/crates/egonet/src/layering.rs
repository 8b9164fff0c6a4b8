//! Contact frequencies and ring detection.
//!
//! Rings come from exact one-dimensional k-means: the optimal clustering of
//! scalar values is a contiguous partition of the sorted array, so dynamic
//! programming over segment boundaries finds the global minimum of the
//! within-cluster sum of squared deviations. No seeding, no iteration — the
//! same input always yields the same rings.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::EgoTimeline;
use crate::model::{
    AnalysisSpan, ChannelSelector, LayeredEgoNetwork, RingMember, TieSeries, Window,
};

#[derive(Debug, Error, PartialEq)]
pub enum LayeringError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("{distinct} distinct values cannot form {k} clusters")]
    TooFewDistinct { distinct: usize, k: usize },
    #[error("values must be finite")]
    NonFiniteValue,
    #[error("full-span frequency undefined: first and last event coincide")]
    ZeroSpan,
    #[error("no events match the selector inside the span")]
    EmptyNetwork,
}

/// Events per 365-day year: `count * 365 / span_days`.
pub fn events_per_year(count: usize, span_days: f64) -> f64 {
    count as f64 * 365.0 / span_days
}

/// Contact frequency of a tie inside a calendar window, in contacts/year.
pub fn contact_frequency(tie: &TieSeries, window: &Window) -> f64 {
    let count = tie.events.iter().filter(|e| window.contains(e.timestamp)).count();
    events_per_year(count, window.span_days())
}

/// Full-span contact frequency over the ego's `[first_ts, last_ts]` span.
pub fn contact_frequency_full(
    tie: &TieSeries,
    first_ts: DateTime<Utc>,
    last_ts: DateTime<Utc>,
) -> Result<f64, LayeringError> {
    if last_ts <= first_ts {
        return Err(LayeringError::ZeroSpan);
    }
    let span_days = (last_ts - first_ts).num_seconds() as f64 / 86_400.0;
    Ok(events_per_year(tie.events.len(), span_days))
}

/// Per-alter contact frequencies for one ego, channel selection and span.
/// Alters without matching events inside the span are absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyVector {
    pub ego_id: String,
    pub channel: ChannelSelector,
    pub span: AnalysisSpan,
    /// Sorted by alter id; frequencies finite and > 0.
    pub entries: Vec<(String, f64)>,
}

/// Counts matching events per alter inside the span and converts to
/// contacts/year.
pub fn frequency_vector(
    timeline: &EgoTimeline,
    channel: ChannelSelector,
    span: Option<Window>,
) -> Result<FrequencyVector, LayeringError> {
    let span = match span {
        Some(w) => AnalysisSpan::Window(w),
        None => {
            if timeline.last_ts <= timeline.first_ts {
                return Err(LayeringError::ZeroSpan);
            }
            AnalysisSpan::Full { first: timeline.first_ts, last: timeline.last_ts }
        }
    };
    let mut counts: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for event in &timeline.events {
        if channel.matches(event.channel) && span.contains(event.timestamp) {
            let alter = event.alter_id.as_deref().expect("direct events carry an alter");
            *counts.entry(alter).or_default() += 1;
        }
    }
    if counts.is_empty() {
        return Err(LayeringError::EmptyNetwork);
    }
    let span_days = span.span_days();
    let entries = counts
        .into_iter()
        .map(|(alter, count)| (alter.to_string(), events_per_year(count, span_days)))
        .collect();
    Ok(FrequencyVector { ego_id: timeline.ego_id.clone(), channel, span, entries })
}

/// Result of exact 1-D k-means.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// `assignment[i]` is the cluster of `values[i]`, in `1..=k`;
    /// cluster 1 has the highest mean.
    pub assignment: Vec<usize>,
    pub k: usize,
    /// Optimal within-cluster sum of squared deviations.
    pub cost: f64,
}

/// Exact 1-D k-means via dynamic programming over the sorted values.
///
/// The assignment minimizes the within-cluster sum of squared deviations;
/// clusters are labeled by descending mean. Ties in optimal cost are broken
/// by preferring the partition whose boundary indices are lexicographically
/// smallest on the sorted array, and equal values keep their input order, so
/// identical inputs always produce identical assignments.
pub fn cluster_1d(values: &[f64], k: usize) -> Result<Clustering, LayeringError> {
    if k == 0 {
        return Err(LayeringError::ZeroK);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(LayeringError::NonFiniteValue);
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    let distinct = if n == 0 { 0 } else { distinct };
    if distinct < k {
        return Err(LayeringError::TooFewDistinct { distinct, k });
    }

    let costs = SegmentCosts::new(&sorted);

    // h[m][i]: optimal cost of splitting sorted[i..n) into m segments.
    // Accumulated as ssq(first segment) + rest, the same fold order the
    // reconstruction and any re-evaluation of a partition use, so costs of
    // partitions compare exactly.
    let mut h = vec![vec![0.0f64; n + 1]; k + 1];
    for i in 0..n {
        h[1][i] = costs.ssq(i, n - 1);
    }
    for m in 2..=k {
        for i in 0..=(n - m) {
            let mut best = f64::INFINITY;
            // Segment [i..=j]; the remaining m-1 segments need n-1-j values.
            for j in i..=(n - m) {
                let cost = costs.ssq(i, j) + h[m - 1][j + 1];
                if cost < best {
                    best = cost;
                }
            }
            h[m][i] = best;
        }
    }

    // Front-to-back reconstruction picking the smallest feasible boundary
    // that attains the optimum gives the lexicographically smallest
    // boundary sequence. With m segments remaining, the one being fixed is
    // segment k - m from the left; labeling it m makes labels descend with
    // the segment means (cluster 1 = highest values).
    let mut assignment = vec![0usize; n];
    let mut start = 0usize;
    for m in (2..=k).rev() {
        let target = h[m][start];
        let mut seg_end = None;
        for j in start..=(n - m) {
            if costs.ssq(start, j) + h[m - 1][j + 1] == target {
                seg_end = Some(j);
                break;
            }
        }
        let j = seg_end.expect("optimal boundary exists");
        for pos in start..=j {
            assignment[order[pos]] = m;
        }
        start = j + 1;
    }
    for pos in start..n {
        assignment[order[pos]] = 1;
    }
    Ok(Clustering { assignment, k, cost: h[k][0] })
}

/// O(1) segment costs from prefix sums over a sorted array.
struct SegmentCosts {
    prefix: Vec<f64>,
    prefix_sq: Vec<f64>,
}

impl SegmentCosts {
    fn new(sorted: &[f64]) -> Self {
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        let mut prefix_sq = Vec::with_capacity(sorted.len() + 1);
        let (mut s, mut s2) = (0.0f64, 0.0f64);
        prefix.push(0.0);
        prefix_sq.push(0.0);
        for &v in sorted {
            s += v;
            s2 += v * v;
            prefix.push(s);
            prefix_sq.push(s2);
        }
        SegmentCosts { prefix, prefix_sq }
    }

    /// Sum of squared deviations from the mean over `sorted[i..=j]`.
    fn ssq(&self, i: usize, j: usize) -> f64 {
        let len = (j + 1 - i) as f64;
        let s = self.prefix[j + 1] - self.prefix[i];
        let s2 = self.prefix_sq[j + 1] - self.prefix_sq[i];
        (s2 - s * s / len).max(0.0)
    }
}

/// Picks the cluster count by the Akaike information criterion.
///
/// For each k in `1..=min(k_max, #distinct)` the exact clustering is fitted
/// and scored as `n*ln(RSS/n) + 2k`. A perfect fit (RSS = 0) acts as an
/// infinitely good likelihood, preferring the smallest such k; other ties go
/// to the smaller k.
pub fn select_k_aic(values: &[f64], k_max: usize) -> usize {
    let n = values.len();
    if n == 0 || k_max == 0 {
        return 1;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    let mut best_k = 1;
    let mut best_aic = f64::INFINITY;
    for k in 1..=k_max.min(distinct) {
        let rss = cluster_1d(values, k).expect("k <= distinct").cost;
        if rss <= 0.0 {
            return k;
        }
        let aic = n as f64 * (rss / n as f64).ln() + 2.0 * k as f64;
        if aic < best_aic {
            best_aic = aic;
            best_k = k;
        }
    }
    best_k
}

/// Builds a layered ego network by clustering contact frequencies.
///
/// Requests `k` rings but caps it at the number of distinct frequencies;
/// `k_used` records what was actually fitted. `span = None` means the ego's
/// full recorded history.
pub fn build_ego_network(
    timeline: &EgoTimeline,
    channel: ChannelSelector,
    span: Option<Window>,
    k: usize,
) -> Result<LayeredEgoNetwork, LayeringError> {
    if k == 0 {
        return Err(LayeringError::ZeroK);
    }
    let fv = frequency_vector(timeline, channel, span)?;
    let freqs: Vec<f64> = fv.entries.iter().map(|(_, f)| *f).collect();
    let mut sorted = freqs.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let distinct = 1 + sorted.windows(2).filter(|w| w[0] != w[1]).count();
    let k_used = k.min(distinct);
    let clustering = cluster_1d(&freqs, k_used).expect("k_used <= distinct");
    let mut rings: Vec<Vec<RingMember>> = vec![Vec::new(); k_used];
    for ((alter, freq), &cluster) in fv.entries.iter().zip(&clustering.assignment) {
        rings[cluster - 1].push(RingMember { alter_id: alter.clone(), frequency: *freq });
    }
    Ok(LayeredEgoNetwork {
        ego_id: fv.ego_id,
        channel,
        span: fv.span,
        rings,
        k_used: k_used as u8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::build_timeline;
    use crate::model::{Channel, InteractionEvent};
    use chrono::TimeZone;

    fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn tie(n_events: usize) -> TieSeries {
        let events = (0..n_events)
            .map(|i| {
                InteractionEvent::new(
                    format!("t{i}"),
                    "ego",
                    Some("alter".into()),
                    Channel::Reply,
                    Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap()
                        + chrono::Duration::days(i as i64),
                    vec![],
                )
                .unwrap()
            })
            .collect();
        TieSeries {
            ego_id: "ego".into(),
            alter_id: "alter".into(),
            channel: ChannelSelector::AllDirect,
            events,
        }
    }

    #[test]
    fn frequency_inside_a_year_window() {
        let w = Window::new(ts("2015-01-01T00:00:00Z"), 12).unwrap();
        assert_eq!(contact_frequency(&tie(12), &w), 12.0);
        assert_eq!(contact_frequency(&tie(1), &w), 1.0);
    }

    #[test]
    fn full_span_frequency_and_zero_span() {
        let t = tie(6);
        let first = t.events[0].timestamp;
        // 183-day span.
        let last = first + chrono::Duration::days(183);
        let f = contact_frequency_full(&t, first, last).unwrap();
        assert!((f - 6.0 * 365.0 / 183.0).abs() < 1e-12);
        assert_eq!(
            contact_frequency_full(&t, first, first),
            Err(LayeringError::ZeroSpan)
        );
    }

    #[test]
    fn clusters_five_obvious_pairs() {
        let values = [100.0, 99.0, 30.0, 29.0, 10.0, 9.0, 3.0, 3.1, 1.0, 1.1];
        let c = cluster_1d(&values, 5).unwrap();
        assert_eq!(c.assignment, vec![1, 1, 2, 2, 3, 3, 4, 4, 5, 5]);
    }

    #[test]
    fn k_one_is_a_single_cluster() {
        let c = cluster_1d(&[4.0, 8.0, 15.0], 1).unwrap();
        assert_eq!(c.assignment, vec![1, 1, 1]);
    }

    #[test]
    fn too_few_distinct_values() {
        assert_eq!(
            cluster_1d(&[1.0, 1.0, 1.0], 2),
            Err(LayeringError::TooFewDistinct { distinct: 1, k: 2 })
        );
    }

    #[test]
    fn labels_descend_with_mean() {
        let c = cluster_1d(&[1.0, 50.0, 2.0, 51.0], 2).unwrap();
        assert_eq!(c.assignment, vec![2, 1, 2, 1]);
    }

    #[test]
    fn aic_selects_the_planted_group_count() {
        // Five tight groups: one distinct value each, so a perfect fit first
        // appears at k = 5.
        let mut values = Vec::new();
        for center in [1.0, 10.0, 100.0, 1000.0, 10000.0] {
            values.extend(std::iter::repeat(center).take(4));
        }
        assert_eq!(select_k_aic(&values, 10), 5);
        // Two separated groups.
        let two: Vec<f64> = vec![5.0, 5.0, 5.0, 80.0, 80.0, 80.0];
        assert_eq!(select_k_aic(&two, 10), 2);
        // All identical.
        assert_eq!(select_k_aic(&[7.0; 9], 10), 1);
        // Small spread, k capped at 5: AIC still reaches the planted count.
        let mut spread = Vec::new();
        for center in [10.0, 100.0, 1000.0, 10000.0, 100000.0] {
            spread.extend([center - 1.0, center, center + 1.0]);
        }
        assert_eq!(select_k_aic(&spread, 5), 5);
    }

    fn timeline_with_tiers(counts: &[(usize, usize)]) -> EgoTimeline {
        // counts: (alters, events each), spread over 2015 (365 days).
        let mut events = Vec::new();
        let mut alter_n = 0;
        for &(alters, per_alter) in counts {
            for _ in 0..alters {
                alter_n += 1;
                for e in 0..per_alter {
                    events.push(
                        InteractionEvent::new(
                            format!("t{alter_n}-{e}"),
                            "ego",
                            Some(format!("a{alter_n:03}")),
                            Channel::Mention,
                            ts("2015-01-01T00:00:00Z")
                                + chrono::Duration::hours(1 + (e * 364 * 24 / per_alter) as i64),
                            vec![],
                        )
                        .unwrap(),
                    );
                }
            }
        }
        // Anchor events pinning the span to a full year.
        events.push(
            InteractionEvent::new("anchor0", "ego", None, Channel::Plain, ts("2015-01-01T00:00:00Z"), vec![])
                .unwrap(),
        );
        events.push(
            InteractionEvent::new("anchor1", "ego", None, Channel::Plain, ts("2016-01-01T00:00:00Z"), vec![])
                .unwrap(),
        );
        build_timeline(events).unwrap()
    }

    #[test]
    fn network_orders_rings_by_descending_frequency() {
        let timeline = timeline_with_tiers(&[(1, 100), (3, 30), (6, 9), (10, 3), (20, 1)]);
        let net = build_ego_network(&timeline, ChannelSelector::AllDirect, None, 5).unwrap();
        assert_eq!(net.k_used, 5);
        let sizes: Vec<usize> = net.rings.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 3, 6, 10, 20]);
        for pair in net.rings.windows(2) {
            let mean = |r: &[RingMember]| {
                r.iter().map(|m| m.frequency).sum::<f64>() / r.len() as f64
            };
            assert!(mean(&pair[0]) > mean(&pair[1]));
        }
    }

    #[test]
    fn identical_frequencies_collapse_to_one_ring() {
        let timeline = timeline_with_tiers(&[(3, 7)]);
        let net = build_ego_network(&timeline, ChannelSelector::AllDirect, None, 5).unwrap();
        assert_eq!(net.k_used, 1);
        assert_eq!(net.rings[0].len(), 3);
    }

    #[test]
    fn empty_network_when_nothing_matches() {
        let timeline = timeline_with_tiers(&[(2, 5)]);
        // Tier events are mentions; a reply network has nothing to cluster.
        assert_eq!(
            build_ego_network(&timeline, ChannelSelector::Reply, None, 5).unwrap_err(),
            LayeringError::EmptyNetwork
        );
    }

    #[test]
    fn scale_equivariance_for_power_of_two_factors() {
        // Powers of two rescale every intermediate exactly, so the
        // assignment must be bit-for-bit identical.
        let values = [3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.0, 3.5];
        let base = cluster_1d(&values, 3).unwrap();
        for factor in [0.25f64, 0.5, 2.0, 1024.0] {
            let scaled: Vec<f64> = values.iter().map(|v| v * factor).collect();
            let c = cluster_1d(&scaled, 3).unwrap();
            assert_eq!(c.assignment, base.assignment, "factor {factor}");
        }
    }
}
