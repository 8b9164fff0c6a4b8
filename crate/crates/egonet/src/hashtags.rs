//! Hashtag-activated ties, intensity/diversity indices, growth series, and
//! the per-ring comparative report.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::EgoTimeline;
use crate::model::{month_index, ChannelSelector, InteractionEvent, LayeredEgoNetwork, RingId, TieSeries};

/// Splits a timeline into one tie series per alter for a channel selection.
/// Ties are sorted by alter id; events within a tie by (timestamp, tweet_id).
pub fn tie_series(timeline: &EgoTimeline, channel: ChannelSelector) -> Vec<TieSeries> {
    let mut by_alter: BTreeMap<&str, Vec<InteractionEvent>> = BTreeMap::new();
    for event in &timeline.events {
        if channel.matches(event.channel) {
            let alter = event.alter_id.as_deref().expect("direct events carry an alter");
            by_alter.entry(alter).or_default().push(event.clone());
        }
    }
    by_alter
        .into_iter()
        .map(|(alter, mut events)| {
            events.sort_by(|a, b| (a.timestamp, &a.tweet_id).cmp(&(b.timestamp, &b.tweet_id)));
            TieSeries {
                ego_id: timeline.ego_id.clone(),
                alter_id: alter.to_string(),
                channel,
                events,
            }
        })
        .collect()
}

/// Whether the tie's first direct tweet carries a hashtag, and which one.
///
/// When the first tweet lists several hashtags, the activating one is the
/// tag used most over the whole tie, ties broken by order of appearance in
/// the first tweet.
pub fn detect_activation(tie: &TieSeries) -> (bool, Option<String>) {
    let first = tie.first_contact();
    if first.hashtags.is_empty() {
        return (false, None);
    }
    let counts = tweets_per_tag(&tie.events);
    let mut best: Option<(&str, usize)> = None;
    let mut seen = BTreeSet::new();
    for tag in &first.hashtags {
        if !seen.insert(tag.as_str()) {
            continue;
        }
        let count = counts.get(tag.as_str()).copied().unwrap_or(0);
        if best.map(|(_, c)| count > c).unwrap_or(true) {
            best = Some((tag, count));
        }
    }
    (true, best.map(|(tag, _)| tag.to_string()))
}

/// Number of tweets containing each tag at least once.
fn tweets_per_tag(events: &[InteractionEvent]) -> BTreeMap<&str, usize> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for event in events {
        let mut in_tweet = BTreeSet::new();
        for tag in &event.hashtags {
            if in_tweet.insert(tag.as_str()) {
                *counts.entry(tag).or_default() += 1;
            }
        }
    }
    counts
}

/// Ego-wide hashtag usage: distinct direct tweets containing each tag.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EgoHashtagIndex {
    pub tweets_per_tag: BTreeMap<String, usize>,
}

impl EgoHashtagIndex {
    /// Builds the index over all of an ego's ties. Tweets are deduplicated by
    /// id, so a multi-alter tweet counts once per tag.
    pub fn build(ties: &[TieSeries]) -> Self {
        let mut seen_tweets = BTreeSet::new();
        let mut tweets_per_tag: BTreeMap<String, usize> = BTreeMap::new();
        for tie in ties {
            for event in &tie.events {
                if !seen_tweets.insert(event.tweet_id.clone()) {
                    continue;
                }
                let mut in_tweet = BTreeSet::new();
                for tag in &event.hashtags {
                    if in_tweet.insert(tag.as_str()) {
                        *tweets_per_tag.entry(tag.clone()).or_default() += 1;
                    }
                }
            }
        }
        EgoHashtagIndex { tweets_per_tag }
    }

    pub fn count(&self, tag: &str) -> usize {
        self.tweets_per_tag.get(tag).copied().unwrap_or(0)
    }
}

/// Activation flag and the six intensity/diversity indices of one tie.
///
/// The `n_*` counts are numbers of direct tweets containing the tag (at tie
/// scope for `n_r_*`, at ego scope for `n_e_*`); `d_rel` counts hashtag
/// occurrences on the tie with multiplicity and `u_rel` counts distinct tags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashtagTieStats {
    pub ego_id: String,
    pub alter_id: String,
    pub activated: bool,
    pub h_act: Option<String>,
    pub h_max: Option<String>,
    pub n_r_hact: usize,
    pub n_e_hact: usize,
    pub n_r_hmax: usize,
    pub n_e_hmax: usize,
    pub d_rel: usize,
    pub u_rel: usize,
}

/// Computes the hashtag indices of one tie against its ego's usage index.
pub fn tie_hashtag_stats(tie: &TieSeries, ego_index: &EgoHashtagIndex) -> HashtagTieStats {
    let (activated, h_act) = detect_activation(tie);
    let counts = tweets_per_tag(&tie.events);
    // Most-used tag on the tie; ties broken by first occurrence order.
    let mut h_max: Option<(&str, usize)> = None;
    let mut seen = BTreeSet::new();
    for event in &tie.events {
        for tag in &event.hashtags {
            if !seen.insert(tag.as_str()) {
                continue;
            }
            let count = counts[tag.as_str()];
            if h_max.map(|(_, c)| count > c).unwrap_or(true) {
                h_max = Some((tag, count));
            }
        }
    }
    let d_rel = tie.events.iter().map(|e| e.hashtags.len()).sum();
    let u_rel = counts.len();
    let (n_r_hact, n_e_hact) = match &h_act {
        Some(tag) => (counts.get(tag.as_str()).copied().unwrap_or(0), ego_index.count(tag)),
        None => (0, 0),
    };
    let (h_max, n_r_hmax, n_e_hmax) = match h_max {
        Some((tag, count)) => (Some(tag.to_string()), count, ego_index.count(tag)),
        None => (None, 0, 0),
    };
    HashtagTieStats {
        ego_id: tie.ego_id.clone(),
        alter_id: tie.alter_id.clone(),
        activated,
        h_act,
        h_max,
        n_r_hact,
        n_e_hact,
        n_r_hmax,
        n_e_hmax,
        d_rel,
        u_rel,
    }
}

/// Group means over either the activated or the non-activated ties of a ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub n: usize,
    pub mean_frequency: Option<f64>,
    pub mean_d_rel: Option<f64>,
    pub mean_u_rel: Option<f64>,
}

impl GroupStats {
    fn from_rows(rows: &[&TieRow]) -> Self {
        let n = rows.len();
        let mean = |f: &dyn Fn(&TieRow) -> f64| {
            (n > 0).then(|| rows.iter().map(|r| f(r)).sum::<f64>() / n as f64)
        };
        GroupStats {
            n,
            mean_frequency: mean(&|r| r.frequency),
            mean_d_rel: mean(&|r| r.stats.d_rel as f64),
            mean_u_rel: mean(&|r| r.stats.u_rel as f64),
        }
    }
}

/// One ring's activation share and per-group means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingHashtagRow {
    pub ring: Option<RingId>,
    pub n_ties: usize,
    pub pct_activated: f64,
    pub activated: GroupStats,
    pub non_activated: GroupStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerHashtagReport {
    /// Sample label naming the population the rows were computed over.
    pub sample: String,
    /// One row per ring R1..R5.
    pub rings: Vec<RingHashtagRow>,
    /// All ties pooled (`ring = None`).
    pub overall: RingHashtagRow,
}

/// A tie joined with its ring and contact frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieRow {
    pub ego_id: String,
    pub alter_id: String,
    pub ring: RingId,
    pub frequency: f64,
    pub stats: HashtagTieStats,
}

/// Joins full-span networks with their ties, computing hashtag indices per
/// tie. Ties of alters outside the clustered network are skipped.
pub fn collect_tie_rows(egos: &[(&LayeredEgoNetwork, &[TieSeries])]) -> Vec<TieRow> {
    let mut rows = Vec::new();
    for (net, ties) in egos {
        let index = EgoHashtagIndex::build(ties);
        for tie in ties.iter() {
            let ring = net.position_of(&tie.alter_id);
            if ring == RingId::Out {
                continue;
            }
            let frequency = net
                .ring(ring)
                .iter()
                .find(|m| m.alter_id == tie.alter_id)
                .expect("position_of found the member")
                .frequency;
            rows.push(TieRow {
                ego_id: tie.ego_id.clone(),
                alter_id: tie.alter_id.clone(),
                ring,
                frequency,
                stats: tie_hashtag_stats(tie, &index),
            });
        }
    }
    rows
}

fn ring_row(ring: Option<RingId>, rows: &[&TieRow]) -> RingHashtagRow {
    let (activated, non_activated): (Vec<&TieRow>, Vec<&TieRow>) =
        rows.iter().partition(|r| r.stats.activated);
    RingHashtagRow {
        ring,
        n_ties: rows.len(),
        pct_activated: if rows.is_empty() {
            0.0
        } else {
            activated.len() as f64 * 100.0 / rows.len() as f64
        },
        activated: GroupStats::from_rows(&activated),
        non_activated: GroupStats::from_rows(&non_activated),
    }
}

/// Partitions ties by ring and activation and emits the per-ring report.
pub fn layer_hashtag_report(sample: impl Into<String>, rows: &[TieRow]) -> LayerHashtagReport {
    let rings = RingId::RINGS
        .iter()
        .map(|&ring| {
            let in_ring: Vec<&TieRow> = rows.iter().filter(|r| r.ring == ring).collect();
            ring_row(Some(ring), &in_ring)
        })
        .collect();
    let all: Vec<&TieRow> = rows.iter().collect();
    LayerHashtagReport { sample: sample.into(), rings, overall: ring_row(None, &all) }
}

/// Monthly counts of first-seen alters and hashtags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowthMonth {
    /// Months since the ego's first direct event.
    pub month: usize,
    pub new_alters: usize,
    pub new_hashtags: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub ego_id: String,
    pub months: Vec<GrowthMonth>,
    pub mean_new_alters: f64,
    pub mean_new_hashtags: f64,
}

/// Counts, per calendar month since the first direct event, the alters and
/// distinct hashtags whose first appearance on a direct tweet falls in that
/// month. Months without growth are included (and enter the means).
pub fn growth_series(timeline: &EgoTimeline) -> Option<GrowthSeries> {
    let direct: Vec<&InteractionEvent> =
        timeline.events.iter().filter(|e| e.channel.is_direct()).collect();
    let first = direct.first()?;
    let month0 = month_index(first.timestamp);
    let last_month = month_index(direct.last().expect("non-empty").timestamp);
    let n_months = (last_month - month0 + 1) as usize;
    let mut new_alters = vec![0usize; n_months];
    let mut new_hashtags = vec![0usize; n_months];
    let mut seen_alters = BTreeSet::new();
    let mut seen_tags = BTreeSet::new();
    for event in &direct {
        let m = (month_index(event.timestamp) - month0) as usize;
        let alter = event.alter_id.as_deref().expect("direct events carry an alter");
        if seen_alters.insert(alter) {
            new_alters[m] += 1;
        }
        for tag in &event.hashtags {
            if seen_tags.insert(tag.as_str()) {
                new_hashtags[m] += 1;
            }
        }
    }
    let months = (0..n_months)
        .map(|m| GrowthMonth { month: m, new_alters: new_alters[m], new_hashtags: new_hashtags[m] })
        .collect();
    Some(GrowthSeries {
        ego_id: timeline.ego_id.clone(),
        mean_new_alters: new_alters.iter().sum::<usize>() as f64 / n_months as f64,
        mean_new_hashtags: new_hashtags.iter().sum::<usize>() as f64 / n_months as f64,
        months,
    })
}
