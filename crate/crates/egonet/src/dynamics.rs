//! Windowed turnover analysis: Jaccard stability, jump indices, and the
//! static-vs-dynamic correspondence matrix.
//!
//! Dynamics always run on all three direct channels together. A window in
//! which the ego has no direct events yields no network; ties count as
//! outside the active network there.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::EgoTimeline;
use crate::layering::{build_ego_network, LayeringError};
use crate::model::{month_index, ChannelSelector, LayeredEgoNetwork, RingId, Window};

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("timeline spans {got} months; {needed} are required for one window")]
    SpanTooShort { got: u32, needed: u32 },
}

/// How consecutive windows advance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// Step of one month; consecutive windows share all but one month.
    Overlapping,
    /// Step equal to the window length; windows tile without gaps.
    Disjoint,
}

/// An ordered series of equally long windows over one timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSeries {
    pub windows: Vec<Window>,
    pub mode: WindowMode,
}

/// Builds the window series covering a timeline.
///
/// The first window starts at the calendar month of the first event; windows
/// reaching past the month of the last event are discarded.
pub fn make_windows(
    timeline: &EgoTimeline,
    length_months: u32,
    mode: WindowMode,
) -> Result<WindowSeries, DynamicsError> {
    let first = month_index(timeline.first_ts);
    let last = month_index(timeline.last_ts);
    let span = (last - first + 1) as u32;
    if span < length_months {
        return Err(DynamicsError::SpanTooShort { got: span, needed: length_months });
    }
    let step = match mode {
        WindowMode::Overlapping => 1,
        WindowMode::Disjoint => length_months as i32,
    };
    let mut windows = Vec::new();
    let mut start = first;
    while start + length_months as i32 - 1 <= last {
        windows.push(Window::from_month(start, length_months));
        start += step;
    }
    Ok(WindowSeries { windows, mode })
}

/// Jaccard index between one ring's member sets in two adjacent networks.
/// Returns `None` when both rings are empty (no sample rather than 0).
pub fn ring_jaccard(
    net_a: &LayeredEgoNetwork,
    net_b: &LayeredEgoNetwork,
    ring: RingId,
) -> Option<f64> {
    let a: BTreeSet<&str> = net_a.ring(ring).iter().map(|m| m.alter_id.as_str()).collect();
    let b: BTreeSet<&str> = net_b.ring(ring).iter().map(|m| m.alter_id.as_str()).collect();
    if a.is_empty() && b.is_empty() {
        return None;
    }
    let intersection = a.intersection(&b).count();
    let union = a.union(&b).count();
    Some(intersection as f64 / union as f64)
}

/// One alter's movement between adjacent windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSample {
    pub alter_id: String,
    pub start: RingId,
    pub end: RingId,
    /// `|position(start) - position(end)|`, in 1..=5.
    pub jumps: u8,
    /// Jumps divided by the maximum possible from the start position.
    pub normalized: f64,
}

/// Ring movements of every alter present in either network.
///
/// An alter absent from a network sits at `Out` (position 6); moves of zero
/// rings are discarded, so each sample is conditioned on movement.
pub fn jump_samples(net_a: &LayeredEgoNetwork, net_b: &LayeredEgoNetwork) -> Vec<JumpSample> {
    let mut alters: BTreeSet<&str> = BTreeSet::new();
    for net in [net_a, net_b] {
        for ring in &net.rings {
            alters.extend(ring.iter().map(|m| m.alter_id.as_str()));
        }
    }
    let mut samples = Vec::new();
    for alter in alters {
        let start = net_a.position_of(alter);
        let end = net_b.position_of(alter);
        if start == end {
            continue;
        }
        let (s, e) = (start.position() as i8, end.position() as i8);
        let jumps = (s - e).unsigned_abs();
        let max_jumps = (s - 1).max(6 - s) as f64;
        samples.push(JumpSample {
            alter_id: alter.to_string(),
            start,
            end,
            jumps,
            normalized: jumps as f64 / max_jumps,
        });
    }
    samples
}

/// Mean jumps and normalized jumps over one group of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpStats {
    pub mean_jumps: Option<f64>,
    pub mean_normalized: Option<f64>,
    pub n: usize,
}

/// Turnover statistics of one ring.
///
/// `exit` groups samples by the ring the alter started in; `enter` holds the
/// moves arriving at this ring from outside the network, reported separately;
/// `pooled` combines the two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingTurnover {
    pub ring: RingId,
    pub mean_jaccard: Option<f64>,
    pub jaccard_n: usize,
    pub exit: JumpStats,
    pub enter: JumpStats,
    pub pooled: JumpStats,
}

/// How per-ego statistics combine into population statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Average each ego first, then average the egos.
    Macro,
    /// Pool every sample across egos.
    Micro,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnoverReport {
    pub rings: Vec<RingTurnover>,
    pub aggregation: Aggregation,
    pub n_egos: usize,
    pub n_window_pairs: usize,
}

/// Raw turnover samples of one ego across its adjacent disjoint windows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EgoTurnover {
    pub ego_id: String,
    pub window_pairs: usize,
    /// Jaccard samples keyed by ring position 1..=5.
    pub jaccard: BTreeMap<u8, Vec<f64>>,
    /// (jumps, normalized) keyed by start ring position for moves out of
    /// rings 1..=5.
    pub exits: BTreeMap<u8, Vec<(u8, f64)>>,
    /// (jumps, normalized) keyed by destination ring for moves entering from
    /// outside the network.
    pub entries: BTreeMap<u8, Vec<(u8, f64)>>,
}

/// Builds per-window networks over disjoint one-year windows and collects
/// turnover samples for one ego.
pub fn ego_turnover(
    timeline: &EgoTimeline,
    length_months: u32,
    k: usize,
) -> Result<EgoTurnover, DynamicsError> {
    let series = make_windows(timeline, length_months, WindowMode::Disjoint)?;
    let nets = window_networks(timeline, &series, k);
    let mut out = EgoTurnover { ego_id: timeline.ego_id.clone(), ..Default::default() };
    for pair in nets.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        out.window_pairs += 1;
        for ring in RingId::RINGS {
            let jac = match (a, b) {
                (Some(a), Some(b)) => ring_jaccard(a, b, ring),
                // One side has no network: a non-empty ring on the other side
                // shares nothing with it.
                (Some(net), None) | (None, Some(net)) => {
                    (!net.ring(ring).is_empty()).then_some(0.0)
                }
                (None, None) => None,
            };
            if let Some(j) = jac {
                out.jaccard.entry(ring.position()).or_default().push(j);
            }
        }
        let samples = match (a, b) {
            (Some(a), Some(b)) => jump_samples(a, b),
            (Some(a), None) => exit_all(a),
            (None, Some(b)) => enter_all(b),
            (None, None) => Vec::new(),
        };
        for s in samples {
            if s.start == RingId::Out {
                out.entries
                    .entry(s.end.position())
                    .or_default()
                    .push((s.jumps, s.normalized));
            } else {
                out.exits
                    .entry(s.start.position())
                    .or_default()
                    .push((s.jumps, s.normalized));
            }
        }
    }
    Ok(out)
}

/// Every clustered alter of `net` moving to `Out`.
fn exit_all(net: &LayeredEgoNetwork) -> Vec<JumpSample> {
    all_moves(net, true)
}

/// Every clustered alter of `net` arriving from `Out`.
fn enter_all(net: &LayeredEgoNetwork) -> Vec<JumpSample> {
    all_moves(net, false)
}

fn all_moves(net: &LayeredEgoNetwork, exiting: bool) -> Vec<JumpSample> {
    let mut samples = Vec::new();
    for (i, ring) in net.rings.iter().enumerate() {
        let pos = i as u8 + 1;
        let ring_id = RingId::from_position(pos).expect("k_used <= 5");
        for member in ring {
            let jumps = 6 - pos;
            samples.push(JumpSample {
                alter_id: member.alter_id.clone(),
                start: if exiting { ring_id } else { RingId::Out },
                end: if exiting { RingId::Out } else { ring_id },
                jumps,
                normalized: jumps as f64
                    / (if exiting { (pos - 1).max(6 - pos) } else { 5 }) as f64,
            });
        }
    }
    samples
}

/// Clusters each window of a series; `None` marks windows without any
/// matching direct event.
pub fn window_networks(
    timeline: &EgoTimeline,
    series: &WindowSeries,
    k: usize,
) -> Vec<Option<LayeredEgoNetwork>> {
    series
        .windows
        .iter()
        .map(|w| {
            match build_ego_network(timeline, ChannelSelector::AllDirect, Some(*w), k) {
                Ok(net) => Some(net),
                Err(LayeringError::EmptyNetwork) => None,
                Err(e) => unreachable!("window spans are positive: {e}"),
            }
        })
        .collect()
}

fn stats_of(pairs: &[(u8, f64)]) -> JumpStats {
    if pairs.is_empty() {
        return JumpStats { mean_jumps: None, mean_normalized: None, n: 0 };
    }
    let n = pairs.len() as f64;
    JumpStats {
        mean_jumps: Some(pairs.iter().map(|(j, _)| *j as f64).sum::<f64>() / n),
        mean_normalized: Some(pairs.iter().map(|(_, v)| v).sum::<f64>() / n),
        n: pairs.len(),
    }
}

fn mean_of(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Combines per-ego turnover samples into the population report.
pub fn turnover_report(egos: &[EgoTurnover], aggregation: Aggregation) -> TurnoverReport {
    let mut rings = Vec::new();
    for ring in RingId::RINGS {
        let pos = ring.position();
        let (jaccard, jaccard_n) = aggregate_scalar(
            egos.iter().map(|e| e.jaccard.get(&pos).map(Vec::as_slice).unwrap_or(&[])),
            aggregation,
        );
        let exit = aggregate_jumps(
            egos.iter().map(|e| e.exits.get(&pos).map(Vec::as_slice).unwrap_or(&[])),
            aggregation,
        );
        let enter = aggregate_jumps(
            egos.iter().map(|e| e.entries.get(&pos).map(Vec::as_slice).unwrap_or(&[])),
            aggregation,
        );
        let pooled = aggregate_jumps(
            egos.iter().map(|e| {
                let mut both = e.exits.get(&pos).cloned().unwrap_or_default();
                both.extend(e.entries.get(&pos).iter().flat_map(|v| v.iter().copied()));
                both
            }),
            aggregation,
        );
        rings.push(RingTurnover {
            ring,
            mean_jaccard: jaccard,
            jaccard_n,
            exit,
            enter,
            pooled,
        });
    }
    TurnoverReport {
        rings,
        aggregation,
        n_egos: egos.len(),
        n_window_pairs: egos.iter().map(|e| e.window_pairs).sum(),
    }
}

fn aggregate_scalar<'a, I: Iterator<Item = &'a [f64]>>(
    per_ego: I,
    aggregation: Aggregation,
) -> (Option<f64>, usize) {
    match aggregation {
        Aggregation::Macro => {
            let means: Vec<f64> = per_ego.filter_map(mean_of).collect();
            (mean_of(&means), means.len())
        }
        Aggregation::Micro => {
            let all: Vec<f64> = per_ego.flat_map(|s| s.iter().copied()).collect();
            let n = all.len();
            (mean_of(&all), n)
        }
    }
}

fn aggregate_jumps<S: AsRef<[(u8, f64)]>, I: Iterator<Item = S>>(
    per_ego: I,
    aggregation: Aggregation,
) -> JumpStats {
    match aggregation {
        Aggregation::Macro => {
            let mut jump_means = Vec::new();
            let mut norm_means = Vec::new();
            let mut n = 0;
            for samples in per_ego {
                let s = stats_of(samples.as_ref());
                if let (Some(j), Some(v)) = (s.mean_jumps, s.mean_normalized) {
                    jump_means.push(j);
                    norm_means.push(v);
                    n += 1;
                }
            }
            JumpStats { mean_jumps: mean_of(&jump_means), mean_normalized: mean_of(&norm_means), n }
        }
        Aggregation::Micro => {
            let all: Vec<(u8, f64)> =
                per_ego.flat_map(|s| s.as_ref().to_vec()).collect();
            stats_of(&all)
        }
    }
}

/// Static-ring rows against dynamic-layer columns (R1..R5 and OUT).
///
/// Entry (i, j) is the mean, over ties in static ring i, of the fraction of
/// dynamic windows the tie spends in layer j. Non-empty rows sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceMatrix {
    pub rows: [[f64; 6]; 5],
    /// Ties per static ring; a zero marks an empty (all-zero) row.
    pub tie_counts: [usize; 5],
    pub n_windows: usize,
}

/// Computes the correspondence between a full-span network's rings and the
/// layers its ties occupy across an overlapping window series.
pub fn correspondence(
    static_net: &LayeredEgoNetwork,
    dynamic_nets: &[Option<LayeredEgoNetwork>],
) -> CorrespondenceMatrix {
    let mut rows = [[0.0f64; 6]; 5];
    let mut tie_counts = [0usize; 5];
    let n_windows = dynamic_nets.len();
    for (i, ring) in static_net.rings.iter().enumerate() {
        if i >= 5 || ring.is_empty() || n_windows == 0 {
            continue;
        }
        tie_counts[i] = ring.len();
        for member in ring {
            let mut layer_counts = [0usize; 6];
            for net in dynamic_nets {
                let pos = net
                    .as_ref()
                    .map(|n| n.position_of(&member.alter_id))
                    .unwrap_or(RingId::Out);
                layer_counts[pos.position() as usize - 1] += 1;
            }
            for (j, count) in layer_counts.iter().enumerate() {
                rows[i][j] += *count as f64 / n_windows as f64;
            }
        }
        for j in 0..6 {
            rows[i][j] /= ring.len() as f64;
        }
    }
    CorrespondenceMatrix { rows, tie_counts, n_windows }
}

/// Element-wise mean of per-ego correspondence matrices, skipping empty rows.
pub fn mean_correspondence(matrices: &[CorrespondenceMatrix]) -> CorrespondenceMatrix {
    let mut rows = [[0.0f64; 6]; 5];
    let mut tie_counts = [0usize; 5];
    let mut contributors = [0usize; 5];
    for m in matrices {
        for i in 0..5 {
            if m.tie_counts[i] == 0 {
                continue;
            }
            contributors[i] += 1;
            tie_counts[i] += m.tie_counts[i];
            for j in 0..6 {
                rows[i][j] += m.rows[i][j];
            }
        }
    }
    for i in 0..5 {
        if contributors[i] > 0 {
            for j in 0..6 {
                rows[i][j] /= contributors[i] as f64;
            }
        }
    }
    CorrespondenceMatrix {
        rows,
        tie_counts,
        n_windows: matrices.iter().map(|m| m.n_windows).max().unwrap_or(0),
    }
}

/// Full-span network plus the overlapping-window correspondence for one ego.
pub fn ego_correspondence(
    timeline: &EgoTimeline,
    static_net: &LayeredEgoNetwork,
    length_months: u32,
    k: usize,
) -> Result<CorrespondenceMatrix, DynamicsError> {
    let series = make_windows(timeline, length_months, WindowMode::Overlapping)?;
    let nets = window_networks(timeline, &series, k);
    Ok(correspondence(static_net, &nets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::build_timeline;
    use crate::model::{AnalysisSpan, Channel, InteractionEvent, RingMember};
    use chrono::{DateTime, TimeZone, Utc};

    fn ts(s: &str) -> DateTime<Utc> {
        DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
    }

    fn span_timeline(first: &str, last: &str) -> EgoTimeline {
        let mk = |id: &str, t: &str| {
            InteractionEvent::new(id, "ego", Some("a".into()), Channel::Reply, ts(t), vec![])
                .unwrap()
        };
        build_timeline(vec![mk("t0", first), mk("t1", last)]).unwrap()
    }

    #[test]
    fn window_counts_over_24_months() {
        let timeline = span_timeline("2014-01-10T00:00:00Z", "2015-12-20T00:00:00Z");
        let disjoint = make_windows(&timeline, 12, WindowMode::Disjoint).unwrap();
        assert_eq!(disjoint.windows.len(), 2);
        let overlapping = make_windows(&timeline, 12, WindowMode::Overlapping).unwrap();
        assert_eq!(overlapping.windows.len(), 13);
        assert_eq!(overlapping.windows[0].start, ts("2014-01-01T00:00:00Z"));
        assert_eq!(overlapping.windows[12].start, ts("2015-01-01T00:00:00Z"));
    }

    #[test]
    fn eleven_month_span_is_too_short() {
        let timeline = span_timeline("2015-01-10T00:00:00Z", "2015-11-20T00:00:00Z");
        assert_eq!(
            make_windows(&timeline, 12, WindowMode::Disjoint).unwrap_err(),
            DynamicsError::SpanTooShort { got: 11, needed: 12 }
        );
    }

    fn net(ring_members: &[&[&str]]) -> LayeredEgoNetwork {
        let rings = ring_members
            .iter()
            .enumerate()
            .map(|(i, names)| {
                names
                    .iter()
                    .map(|n| RingMember {
                        alter_id: n.to_string(),
                        frequency: 100.0 / (i as f64 + 1.0),
                    })
                    .collect()
            })
            .collect();
        LayeredEgoNetwork::from_rings(
            "ego",
            ChannelSelector::AllDirect,
            AnalysisSpan::Window(Window::new(
                Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap(),
                12,
            ).unwrap()),
            rings,
        )
        .unwrap()
    }

    #[test]
    fn jaccard_basic_cases() {
        let a = net(&[&["a", "b", "c"]]);
        let b = net(&[&["b", "c", "d"]]);
        assert_eq!(ring_jaccard(&a, &b, RingId::R1), Some(0.5));
        assert_eq!(ring_jaccard(&a, &a, RingId::R1), Some(1.0));
        let disjoint = net(&[&["x", "y"]]);
        assert_eq!(ring_jaccard(&a, &disjoint, RingId::R1), Some(0.0));
        // Both sides empty: no sample.
        assert_eq!(ring_jaccard(&a, &b, RingId::R2), None);
    }

    #[test]
    fn jaccard_is_symmetric() {
        let a = net(&[&["a", "b", "c", "d"]]);
        let b = net(&[&["c", "d", "e"]]);
        assert_eq!(
            ring_jaccard(&a, &b, RingId::R1),
            ring_jaccard(&b, &a, RingId::R1)
        );
    }

    #[test]
    fn jump_arithmetic() {
        // R1 -> OUT: 5 jumps, normalized 1; R2 -> R3: 1 jump over max 4.
        let a = net(&[&["p"], &["q"], &["r"]]);
        let b = net(&[&["x"], &["y"], &["q"]]);
        let samples = jump_samples(&a, &b);
        let find = |alter: &str| samples.iter().find(|s| s.alter_id == alter).unwrap();
        let p = find("p");
        assert_eq!((p.start, p.end, p.jumps), (RingId::R1, RingId::Out, 5));
        assert_eq!(p.normalized, 1.0);
        let q = find("q");
        assert_eq!((q.start, q.end, q.jumps), (RingId::R2, RingId::R3, 1));
        assert_eq!(q.normalized, 0.25);
        // x enters R1 from outside: 5 jumps over max 5.
        let x = find("x");
        assert_eq!((x.start, x.end, x.jumps), (RingId::Out, RingId::R1, 5));
        assert_eq!(x.normalized, 1.0);
    }

    #[test]
    fn unmoved_alters_are_discarded() {
        let a = net(&[&["p"], &["q"]]);
        let b = net(&[&["p"], &["q"]]);
        assert!(jump_samples(&a, &b).is_empty());
    }

    #[test]
    fn jump_bounds_hold() {
        let a = net(&[&["a1"], &["a2", "b2"], &["a3"], &["a4"], &["a5"]]);
        let b = net(&[&["a5"], &["b2"], &["a1"], &["a2"], &["a4", "zz"]]);
        for s in jump_samples(&a, &b) {
            assert!((1..=5).contains(&s.jumps));
            assert!(s.normalized > 0.0 && s.normalized <= 1.0);
        }
    }

    #[test]
    fn correspondence_rows_are_stochastic() {
        let static_net = net(&[&["a"], &["b", "c"]]);
        // Three windows: "a" always in R1; "b" flickers between R2 and OUT;
        // "c" never appears.
        let w1 = Some(net(&[&["a"], &["b"]]));
        let w2 = Some(net(&[&["a"], &["z"]]));
        let w3: Option<LayeredEgoNetwork> = None;
        let m = correspondence(&static_net, &[w1, w2, w3]);
        for i in 0..2 {
            let sum: f64 = m.rows[i].iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "row {i} sums to {sum}");
        }
        assert_eq!(m.rows[0][0], 2.0 / 3.0); // a in R1 twice
        assert_eq!(m.rows[0][5], 1.0 / 3.0); // a out once
        // b: R2 once, OUT twice; c: OUT three times; averaged over 2 ties.
        assert!((m.rows[1][1] - 1.0 / 6.0).abs() < 1e-12);
        assert!((m.rows[1][5] - 5.0 / 6.0).abs() < 1e-12);
        // Empty static rows flagged by a zero tie count.
        assert_eq!(m.tie_counts[2], 0);
        assert_eq!(m.rows[2], [0.0; 6]);
    }

    #[test]
    fn churn_law_matches_direct_set_simulation() {
        // Replace a fraction p of a size-n ring per window; expected Jaccard
        // between adjacent windows is (1 - p) / (1 + p).
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(11);
        let n = 60;
        for p in [0.2, 0.5, 0.8] {
            let mut current: Vec<String> = (0..n).map(|i| format!("m{i}")).collect();
            let mut next_id = n;
            let mut jaccards = Vec::new();
            for _ in 0..40 {
                let previous = current.clone();
                for slot in current.iter_mut() {
                    if rng.random_bool(p) {
                        *slot = format!("m{next_id}");
                        next_id += 1;
                    }
                }
                let a = net(&[&previous.iter().map(String::as_str).collect::<Vec<_>>()]);
                let b = net(&[&current.iter().map(String::as_str).collect::<Vec<_>>()]);
                jaccards.push(ring_jaccard(&a, &b, RingId::R1).unwrap());
            }
            let mean = jaccards.iter().sum::<f64>() / jaccards.len() as f64;
            let expected = (1.0 - p) / (1.0 + p);
            assert!(
                (mean - expected).abs() < 0.05,
                "p={p}: mean {mean} vs expected {expected}"
            );
        }
    }
}
