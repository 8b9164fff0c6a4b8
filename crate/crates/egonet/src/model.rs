//! Shared domain vocabulary: events, ties, windows, rings and layered networks.
//!
//! Everything here is immutable after construction and safe to share across
//! threads; all operations are pure.

use std::collections::BTreeSet;

use chrono::{DateTime, Datelike, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("alter_id must be present exactly when the channel is direct")]
    AlterChannelMismatch,
    #[error("alter_id equals ego_id")]
    SelfInteraction,
    #[error("invalid hashtag {0:?}: empty, or contains '#' or whitespace")]
    InvalidHashtag(String),
    #[error("window start is not aligned to the first second of a calendar month")]
    UnalignedWindow,
    #[error("window length must be a positive number of months")]
    EmptyWindow,
    #[error("network has {k_used} rings; the operation requires 5")]
    DegenerateNetwork { k_used: u8 },
    #[error("rings are not disjoint: alter {0:?} appears twice")]
    OverlappingRings(String),
    #[error("ring mean frequencies are not strictly decreasing")]
    UnorderedRings,
    #[error("ring {0} is empty")]
    EmptyRing(u8),
}

/// How a tweet reaches someone: the three direct mechanisms plus plain posts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Reply,
    Mention,
    Retweet,
    Plain,
}

impl Channel {
    pub fn is_direct(self) -> bool {
        self != Channel::Plain
    }
}

/// Selects which direct channels a tie or network is built from.
///
/// `AllDirect` unions replies, mentions and retweets; no selector ever
/// matches plain events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelSelector {
    Reply,
    Mention,
    Retweet,
    AllDirect,
}

impl ChannelSelector {
    pub fn matches(self, channel: Channel) -> bool {
        match self {
            ChannelSelector::Reply => channel == Channel::Reply,
            ChannelSelector::Mention => channel == Channel::Mention,
            ChannelSelector::Retweet => channel == Channel::Retweet,
            ChannelSelector::AllDirect => channel.is_direct(),
        }
    }
}

/// One directed (or plain) tweet action.
///
/// A tweet mentioning `m` alters appears as `m` events sharing `tweet_id`,
/// channel, timestamp and hashtags. Hashtags are stored normalized:
/// lowercased, one leading `#` stripped, duplicates within a tweet preserved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub tweet_id: String,
    pub ego_id: String,
    pub alter_id: Option<String>,
    pub channel: Channel,
    pub timestamp: DateTime<Utc>,
    pub hashtags: Vec<String>,
}

impl InteractionEvent {
    /// Builds an event, normalizing hashtags and checking the invariants:
    /// `alter_id` present iff the channel is direct, alter distinct from ego,
    /// normalized hashtags non-empty with no `#` or whitespace.
    pub fn new(
        tweet_id: impl Into<String>,
        ego_id: impl Into<String>,
        alter_id: Option<String>,
        channel: Channel,
        timestamp: DateTime<Utc>,
        hashtags: Vec<String>,
    ) -> Result<Self, ModelError> {
        let ego_id = ego_id.into();
        if alter_id.is_some() != channel.is_direct() {
            return Err(ModelError::AlterChannelMismatch);
        }
        if alter_id.as_deref() == Some(ego_id.as_str()) {
            return Err(ModelError::SelfInteraction);
        }
        let hashtags = hashtags
            .into_iter()
            .map(|t| {
                let tag = normalize_hashtag(&t);
                if tag.is_empty() || tag.contains('#') || tag.chars().any(char::is_whitespace) {
                    Err(ModelError::InvalidHashtag(t))
                } else {
                    Ok(tag)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(InteractionEvent {
            tweet_id: tweet_id.into(),
            ego_id,
            alter_id,
            channel,
            // Second resolution by contract.
            timestamp: Utc
                .timestamp_opt(timestamp.timestamp(), 0)
                .single()
                .expect("in-range timestamp"),
            hashtags,
        })
    }
}

/// Unicode-aware lowercasing plus stripping of one leading `#`.
pub fn normalize_hashtag(raw: &str) -> String {
    raw.strip_prefix('#').unwrap_or(raw).to_lowercase()
}

/// The time-ordered interaction history between one ego and one alter,
/// restricted to a channel selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieSeries {
    pub ego_id: String,
    pub alter_id: String,
    pub channel: ChannelSelector,
    /// Non-empty, sorted ascending by (timestamp, tweet_id).
    pub events: Vec<InteractionEvent>,
}

impl TieSeries {
    /// The earliest event on the tie.
    pub fn first_contact(&self) -> &InteractionEvent {
        &self.events[0]
    }
}

/// A half-open span of whole calendar months: `[start, start + length_months)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    /// First second of a calendar month, UTC.
    pub start: DateTime<Utc>,
    pub length_months: u32,
}

/// 0-based index of a UTC calendar month on an absolute axis.
pub fn month_index(ts: DateTime<Utc>) -> i32 {
    ts.year() * 12 + ts.month0() as i32
}

/// First second (UTC) of the month with the given absolute index.
pub fn month_start(index: i32) -> DateTime<Utc> {
    let year = index.div_euclid(12);
    let month0 = index.rem_euclid(12) as u32;
    Utc.with_ymd_and_hms(year, month0 + 1, 1, 0, 0, 0)
        .single()
        .expect("valid month start")
}

/// Number of days in the month with the given absolute index.
pub fn days_in_month(index: i32) -> i64 {
    (month_start(index + 1) - month_start(index)).num_days()
}

impl Window {
    pub fn new(start: DateTime<Utc>, length_months: u32) -> Result<Self, ModelError> {
        if month_start(month_index(start)) != start {
            return Err(ModelError::UnalignedWindow);
        }
        if length_months == 0 {
            return Err(ModelError::EmptyWindow);
        }
        Ok(Window { start, length_months })
    }

    /// Window covering `length_months` months starting at the given index.
    pub fn from_month(start_index: i32, length_months: u32) -> Self {
        Window { start: month_start(start_index), length_months }
    }

    pub fn start_month(&self) -> i32 {
        month_index(self.start)
    }

    /// Exclusive end instant.
    pub fn end(&self) -> DateTime<Utc> {
        month_start(self.start_month() + self.length_months as i32)
    }

    pub fn contains(&self, ts: DateTime<Utc>) -> bool {
        ts >= self.start && ts < self.end()
    }

    pub fn span_days(&self) -> f64 {
        (self.end() - self.start).num_seconds() as f64 / 86_400.0
    }
}

/// The observation span a network is built on: a calendar window, or the
/// ego's full recorded history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysisSpan {
    Window(Window),
    /// `[first, last]` instants of the ego's history; requires `first < last`.
    Full { first: DateTime<Utc>, last: DateTime<Utc> },
}

impl AnalysisSpan {
    pub fn span_days(&self) -> f64 {
        match self {
            AnalysisSpan::Window(w) => w.span_days(),
            AnalysisSpan::Full { first, last } => {
                (*last - *first).num_seconds() as f64 / 86_400.0
            }
        }
    }

    pub fn contains(&self, ts: DateTime<Utc>) -> bool {
        match self {
            AnalysisSpan::Window(w) => w.contains(ts),
            AnalysisSpan::Full { first, last } => ts >= *first && ts <= *last,
        }
    }
}

/// Ring position within an ego network. `R1` is the innermost (highest
/// contact frequency) ring; `Out` is the sentinel for "outside the active
/// network", which sits at position 6 for jump arithmetic.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum RingId {
    R1,
    R2,
    R3,
    R4,
    R5,
    #[serde(rename = "OUT")]
    Out,
}

impl RingId {
    pub const RINGS: [RingId; 5] = [RingId::R1, RingId::R2, RingId::R3, RingId::R4, RingId::R5];

    /// 1..=6, with `Out` at 6.
    pub fn position(self) -> u8 {
        match self {
            RingId::R1 => 1,
            RingId::R2 => 2,
            RingId::R3 => 3,
            RingId::R4 => 4,
            RingId::R5 => 5,
            RingId::Out => 6,
        }
    }

    pub fn from_position(pos: u8) -> Option<RingId> {
        match pos {
            1 => Some(RingId::R1),
            2 => Some(RingId::R2),
            3 => Some(RingId::R3),
            4 => Some(RingId::R4),
            5 => Some(RingId::R5),
            6 => Some(RingId::Out),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RingId::R1 => "R1",
            RingId::R2 => "R2",
            RingId::R3 => "R3",
            RingId::R4 => "R4",
            RingId::R5 => "R5",
            RingId::Out => "OUT",
        }
    }
}

/// One clustered alter: identity plus contact frequency in contacts/year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingMember {
    pub alter_id: String,
    pub frequency: f64,
}

/// An ego's ties clustered into frequency-ordered rings for one span and
/// channel selection.
///
/// Rings are disjoint and numbered 1 (highest mean frequency) to `k_used`;
/// circle `Ci` is the union of rings `1..=i`, so circles are hierarchically
/// inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredEgoNetwork {
    pub ego_id: String,
    pub channel: ChannelSelector,
    pub span: AnalysisSpan,
    /// `rings[i]` holds ring `i + 1`, members sorted by alter id.
    pub rings: Vec<Vec<RingMember>>,
    pub k_used: u8,
}

impl LayeredEgoNetwork {
    /// Assembles a network from explicit ring memberships, checking that the
    /// rings are non-empty, disjoint, and strictly ordered by mean frequency.
    pub fn from_rings(
        ego_id: impl Into<String>,
        channel: ChannelSelector,
        span: AnalysisSpan,
        mut rings: Vec<Vec<RingMember>>,
    ) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for (i, ring) in rings.iter().enumerate() {
            if ring.is_empty() {
                return Err(ModelError::EmptyRing(i as u8 + 1));
            }
            for member in ring {
                if !seen.insert(member.alter_id.clone()) {
                    return Err(ModelError::OverlappingRings(member.alter_id.clone()));
                }
            }
        }
        let mean = |ring: &[RingMember]| {
            ring.iter().map(|m| m.frequency).sum::<f64>() / ring.len() as f64
        };
        for pair in rings.windows(2) {
            if mean(&pair[0]) <= mean(&pair[1]) {
                return Err(ModelError::UnorderedRings);
            }
        }
        for ring in &mut rings {
            ring.sort_by(|a, b| a.alter_id.cmp(&b.alter_id));
        }
        let k_used = rings.len() as u8;
        Ok(LayeredEgoNetwork { ego_id: ego_id.into(), channel, span, rings, k_used })
    }

    /// Members of ring `ring`, or an empty slice for rings beyond `k_used`
    /// (and for `Out`, which never has members).
    pub fn ring(&self, ring: RingId) -> &[RingMember] {
        let idx = ring.position() as usize - 1;
        self.rings.get(idx).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The alter's ring, or `Out` if it is not clustered in this network.
    pub fn position_of(&self, alter_id: &str) -> RingId {
        for (i, ring) in self.rings.iter().enumerate() {
            if ring.iter().any(|m| m.alter_id == alter_id) {
                return RingId::from_position(i as u8 + 1).expect("k_used <= 5");
            }
        }
        RingId::Out
    }

    /// Total number of clustered alters.
    pub fn alter_count(&self) -> usize {
        self.rings.iter().map(Vec::len).sum()
    }

    /// Cumulative circle sizes `|C1|..|Ck_used|`.
    pub fn cumulative_sizes(&self) -> Vec<usize> {
        let mut total = 0;
        self.rings
            .iter()
            .map(|ring| {
                total += ring.len();
                total
            })
            .collect()
    }
}

/// Circle sizes `|C1|..|C5|` of a fully layered network.
///
/// Errors with [`ModelError::DegenerateNetwork`] when fewer than five rings
/// were used; callers choose whether to skip such networks or pad them via
/// [`circle_sizes_padded`].
pub fn circle_sizes(net: &LayeredEgoNetwork) -> Result<[usize; 5], ModelError> {
    if net.k_used != 5 {
        return Err(ModelError::DegenerateNetwork { k_used: net.k_used });
    }
    let sizes = net.cumulative_sizes();
    Ok([sizes[0], sizes[1], sizes[2], sizes[3], sizes[4]])
}

/// Circle sizes padded to five entries: circles beyond `k_used` repeat the
/// total alter count (their rings are empty).
pub fn circle_sizes_padded(net: &LayeredEgoNetwork) -> [usize; 5] {
    let sizes = net.cumulative_sizes();
    let total = *sizes.last().unwrap_or(&0);
    let mut out = [total; 5];
    for (i, s) in sizes.into_iter().take(5).enumerate() {
        out[i] = s;
    }
    out
}
