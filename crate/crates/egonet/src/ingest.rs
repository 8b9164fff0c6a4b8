//! Interaction-log parsing, monthly activity timelines, and account filters.
//!
//! The input format is one JSON object per line:
//!
//! ```text
//! {"tweet_id": "...", "ego": "...", "kind": "reply"|"mention"|"retweet"|"plain",
//!  "ts": "RFC3339 UTC", "alters": ["..."], "hashtags": ["..."]}
//! ```
//!
//! `alters` must be empty exactly when `kind` is `plain`; a record with k
//! alters expands to k events sharing the tweet id.

use std::collections::BTreeMap;
use std::io::BufRead;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    days_in_month, month_index, Channel, InteractionEvent, ModelError,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input stream is not valid UTF-8 text: {0}")]
    FatalFormat(std::io::Error),
    #[error("no events for timeline construction")]
    EmptyInput,
    #[error("events for one timeline must share an ego: found {0:?} and {1:?}")]
    MixedEgos(String, String),
}

/// One rejected input line: 1-based line number plus reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub reason: String,
}

/// Wire format of one input line.
#[derive(Debug, Serialize, Deserialize)]
pub struct RawRecord {
    pub tweet_id: String,
    pub ego: String,
    pub kind: String,
    pub ts: String,
    pub alters: Vec<String>,
    pub hashtags: Vec<String>,
}

fn expand_record(record: RawRecord) -> Result<Vec<InteractionEvent>, String> {
    let channel = match record.kind.as_str() {
        "reply" => Channel::Reply,
        "mention" => Channel::Mention,
        "retweet" => Channel::Retweet,
        "plain" => Channel::Plain,
        other => return Err(format!("unknown kind {other:?}")),
    };
    let ts = DateTime::parse_from_rfc3339(&record.ts)
        .map_err(|e| format!("invalid ts: {e}"))?
        .with_timezone(&Utc);
    if channel.is_direct() {
        if record.alters.is_empty() {
            return Err(format!("kind {:?} requires at least one alter", record.kind));
        }
        let mut seen = std::collections::BTreeSet::new();
        for alter in &record.alters {
            if !seen.insert(alter) {
                return Err(format!("duplicate alter {alter:?} in record"));
            }
        }
    } else if !record.alters.is_empty() {
        return Err("kind \"plain\" must have empty alters".into());
    }
    let alters: Vec<Option<String>> = if channel.is_direct() {
        record.alters.into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    alters
        .into_iter()
        .map(|alter| {
            InteractionEvent::new(
                record.tweet_id.clone(),
                record.ego.clone(),
                alter,
                channel,
                ts,
                record.hashtags.clone(),
            )
            .map_err(|e: ModelError| e.to_string())
        })
        .collect()
}

/// Parses newline-delimited event records.
///
/// Malformed lines are reported with their line number and reason, never
/// silently dropped; blank lines are skipped. Returns events sorted by
/// (ego_id, timestamp, tweet_id). The only fatal error is a stream that is
/// not valid UTF-8 text.
pub fn parse_events<R: BufRead>(
    reader: R,
) -> Result<(Vec<InteractionEvent>, Vec<ParseDiagnostic>), IngestError> {
    let mut events = Vec::new();
    let mut diagnostics = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(IngestError::FatalFormat)?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(expand_record);
        match parsed {
            Ok(mut evs) => events.append(&mut evs),
            Err(reason) => diagnostics.push(ParseDiagnostic { line: i + 1, reason }),
        }
    }
    events.sort_by(|a, b| {
        (&a.ego_id, a.timestamp, &a.tweet_id).cmp(&(&b.ego_id, b.timestamp, &b.tweet_id))
    });
    Ok((events, diagnostics))
}

/// Renders events back to the wire format, one record per event.
pub fn event_to_record(event: &InteractionEvent) -> RawRecord {
    RawRecord {
        tweet_id: event.tweet_id.clone(),
        ego: event.ego_id.clone(),
        kind: match event.channel {
            Channel::Reply => "reply",
            Channel::Mention => "mention",
            Channel::Retweet => "retweet",
            Channel::Plain => "plain",
        }
        .into(),
        ts: event
            .timestamp
            .to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        alters: event.alter_id.iter().cloned().collect(),
        hashtags: event.hashtags.clone(),
    }
}

/// Per-calendar-month activity counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthBucket {
    /// Absolute month index (see [`month_index`]).
    pub month: i32,
    pub direct_count: usize,
    pub plain_count: usize,
    pub days: i64,
}

/// All events of one ego, with its monthly activity histogram.
///
/// The `months` list covers every calendar month from `first_ts` to
/// `last_ts` inclusive; months without activity appear with zero counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoTimeline {
    pub ego_id: String,
    pub events: Vec<InteractionEvent>,
    pub first_ts: DateTime<Utc>,
    pub last_ts: DateTime<Utc>,
    pub months: Vec<MonthBucket>,
}

/// Buckets one ego's events into a monthly timeline.
pub fn build_timeline(mut events: Vec<InteractionEvent>) -> Result<EgoTimeline, IngestError> {
    let first = events.first().ok_or(IngestError::EmptyInput)?;
    let ego_id = first.ego_id.clone();
    if let Some(other) = events.iter().find(|e| e.ego_id != ego_id) {
        return Err(IngestError::MixedEgos(ego_id, other.ego_id.clone()));
    }
    events.sort_by(|a, b| (a.timestamp, &a.tweet_id).cmp(&(b.timestamp, &b.tweet_id)));
    let first_ts = events.first().unwrap().timestamp;
    let last_ts = events.last().unwrap().timestamp;
    let (lo, hi) = (month_index(first_ts), month_index(last_ts));
    let mut months: Vec<MonthBucket> = (lo..=hi)
        .map(|m| MonthBucket { month: m, direct_count: 0, plain_count: 0, days: days_in_month(m) })
        .collect();
    for event in &events {
        let bucket = &mut months[(month_index(event.timestamp) - lo) as usize];
        if event.channel.is_direct() {
            bucket.direct_count += 1;
        } else {
            bucket.plain_count += 1;
        }
    }
    Ok(EgoTimeline { ego_id, events, first_ts, last_ts, months })
}

/// Groups a parsed event stream by ego and builds one timeline each.
pub fn build_timelines(events: Vec<InteractionEvent>) -> Vec<EgoTimeline> {
    let mut by_ego: BTreeMap<String, Vec<InteractionEvent>> = BTreeMap::new();
    for event in events {
        by_ego.entry(event.ego_id.clone()).or_default().push(event);
    }
    by_ego
        .into_values()
        .map(|evs| build_timeline(evs).expect("non-empty per-ego groups"))
        .collect()
}

/// Account-selection thresholds.
///
/// An ego is kept when its history spans at least `min_span_days` and the
/// fraction of its calendar months averaging at least `min_daily_rate`
/// direct tweets per day reaches `min_qualifying_month_fraction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterPolicy {
    pub min_span_days: i64,
    pub min_daily_rate: f64,
    pub min_qualifying_month_fraction: f64,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        FilterPolicy {
            min_span_days: 183,
            min_daily_rate: 1.0 / 3.0,
            min_qualifying_month_fraction: 0.5,
        }
    }
}

/// Machine-readable rejection reason.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    SpanTooShort,
    TooSporadic,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RejectReason::SpanTooShort => "SpanTooShort",
            RejectReason::TooSporadic => "TooSporadic",
        })
    }
}

/// Applies the activity filters, splitting timelines into kept and rejected.
///
/// Partial first and last months count as full months in the qualifying
/// fraction, and only direct events count toward the monthly rate.
pub fn filter_accounts(
    timelines: Vec<EgoTimeline>,
    policy: &FilterPolicy,
) -> (Vec<EgoTimeline>, Vec<(String, RejectReason)>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for timeline in timelines {
        match check_account(&timeline, policy) {
            None => kept.push(timeline),
            Some(reason) => rejected.push((timeline.ego_id, reason)),
        }
    }
    (kept, rejected)
}

fn check_account(timeline: &EgoTimeline, policy: &FilterPolicy) -> Option<RejectReason> {
    if timeline.last_ts - timeline.first_ts < chrono::Duration::days(policy.min_span_days) {
        return Some(RejectReason::SpanTooShort);
    }
    let qualifying = timeline
        .months
        .iter()
        .filter(|m| m.direct_count as f64 / m.days as f64 >= policy.min_daily_rate)
        .count();
    if (qualifying as f64) < policy.min_qualifying_month_fraction * timeline.months.len() as f64 {
        return Some(RejectReason::TooSporadic);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn line(tweet: &str, kind: &str, ts: &str, alters: &[&str]) -> String {
        serde_json::json!({
            "tweet_id": tweet,
            "ego": "ego1",
            "kind": kind,
            "ts": ts,
            "alters": alters,
            "hashtags": [],
        })
        .to_string()
    }

    #[test]
    fn parses_valid_reply_line() {
        let input = line("t1", "reply", "2015-01-15T10:00:00Z", &["a"]);
        let (events, diags) = parse_events(Cursor::new(input)).unwrap();
        assert_eq!(events.len(), 1);
        assert!(diags.is_empty());
        assert_eq!(events[0].channel, Channel::Reply);
        assert_eq!(events[0].alter_id.as_deref(), Some("a"));
    }

    #[test]
    fn mention_with_two_alters_expands_to_two_events() {
        let input = line("t1", "mention", "2015-01-15T10:00:00Z", &["a", "b"]);
        let (events, diags) = parse_events(Cursor::new(input)).unwrap();
        assert!(diags.is_empty());
        assert_eq!(events.len(), 2);
        assert!(events.iter().all(|e| e.tweet_id == "t1"));
        assert_eq!(events[0].alter_id.as_deref(), Some("a"));
        assert_eq!(events[1].alter_id.as_deref(), Some("b"));
    }

    #[test]
    fn missing_timestamp_yields_diagnostic_naming_the_field() {
        let input = r#"{"tweet_id":"t1","ego":"e","kind":"reply","alters":["a"],"hashtags":[]}"#;
        let (events, diags) = parse_events(Cursor::new(input)).unwrap();
        assert!(events.is_empty());
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].line, 1);
        assert!(diags[0].reason.contains("ts"), "reason: {}", diags[0].reason);
    }

    #[test]
    fn plain_with_alters_and_direct_without_are_rejected() {
        let bad1 = line("t1", "plain", "2015-01-15T10:00:00Z", &["a"]);
        let bad2 = line("t2", "retweet", "2015-01-15T10:00:00Z", &[]);
        let input = format!("{bad1}\n{bad2}\n");
        let (events, diags) = parse_events(Cursor::new(input)).unwrap();
        assert!(events.is_empty());
        assert_eq!(diags.len(), 2);
    }

    #[test]
    fn invalid_utf8_is_fatal() {
        let bytes: &[u8] = &[0xff, 0xfe, b'{'];
        assert!(matches!(
            parse_events(Cursor::new(bytes)),
            Err(IngestError::FatalFormat(_))
        ));
    }

    fn ev(ts: &str, direct: bool) -> InteractionEvent {
        InteractionEvent::new(
            format!("t-{ts}-{direct}"),
            "ego1",
            direct.then(|| "a".to_string()),
            if direct { Channel::Reply } else { Channel::Plain },
            DateTime::parse_from_rfc3339(ts).unwrap().with_timezone(&Utc),
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn timeline_materializes_zero_activity_months() {
        let t = build_timeline(vec![
            ev("2015-01-15T10:00:00Z", true),
            ev("2015-03-02T10:00:00Z", true),
        ])
        .unwrap();
        let counts: Vec<usize> = t.months.iter().map(|m| m.direct_count).collect();
        assert_eq!(counts, vec![1, 0, 1]);
        assert_eq!(t.months[0].days, 31);
        assert_eq!(t.months[1].days, 28);
    }

    #[test]
    fn timeline_single_event_and_empty_input() {
        let t = build_timeline(vec![ev("2015-01-15T10:00:00Z", true)]).unwrap();
        assert_eq!(t.first_ts, t.last_ts);
        assert_eq!(t.months.len(), 1);
        assert!(matches!(build_timeline(vec![]), Err(IngestError::EmptyInput)));
    }

    #[test]
    fn timeline_buckets_partition_events() {
        let mut events = Vec::new();
        for i in 0..100 {
            let mut e = ev("2015-01-15T10:00:00Z", true);
            e.tweet_id = format!("t{i}");
            events.push(e);
        }
        let t = build_timeline(events).unwrap();
        assert_eq!(t.months.len(), 1);
        assert_eq!(t.months[0].direct_count, 100);
    }

    /// Timeline with `per_month` direct events in each of `n_months` months.
    fn steady_timeline(n_months: u32, per_month: u32) -> EgoTimeline {
        let mut events = Vec::new();
        for m in 0..n_months {
            for i in 0..per_month {
                let ts = format!(
                    "2015-{:02}-{:02}T{:02}:00:00Z",
                    m + 1,
                    i % 28 + 1,
                    (i / 28) % 24
                );
                let mut e = ev(&ts, true);
                e.tweet_id = format!("t{m}-{i}");
                events.push(e);
            }
        }
        build_timeline(events).unwrap()
    }

    #[test]
    fn filter_keeps_steady_accounts() {
        let policy = FilterPolicy::default();
        let (kept, rejected) = filter_accounts(vec![steady_timeline(12, 15)], &policy);
        assert_eq!(kept.len(), 1);
        assert!(rejected.is_empty());
    }

    #[test]
    fn filter_rejects_short_spans_regardless_of_intensity() {
        let policy = FilterPolicy::default();
        let (kept, rejected) = filter_accounts(vec![steady_timeline(3, 200)], &policy);
        assert!(kept.is_empty());
        assert_eq!(rejected, vec![("ego1".to_string(), RejectReason::SpanTooShort)]);
    }

    #[test]
    fn filter_rejects_sporadic_accounts() {
        // 12-month span, only 4 months with enough activity.
        let mut events = Vec::new();
        for m in [1u32, 2, 3, 4] {
            for i in 0..15 {
                let ts = format!("2015-{m:02}-{:02}T12:00:00Z", i + 1);
                let mut e = ev(&ts, true);
                e.tweet_id = format!("t{m}-{i}");
                events.push(e);
            }
        }
        events.push(ev("2015-12-20T12:00:00Z", true));
        let timeline = build_timeline(events).unwrap();
        let (kept, rejected) = filter_accounts(vec![timeline], &FilterPolicy::default());
        assert!(kept.is_empty());
        assert_eq!(rejected, vec![("ego1".to_string(), RejectReason::TooSporadic)]);
    }

    #[test]
    fn plain_events_do_not_count_toward_the_rate() {
        let mut events = Vec::new();
        for m in 1..=12u32 {
            for i in 0..15 {
                let ts = format!("2015-{m:02}-{:02}T12:00:00Z", i + 1);
                let mut e = ev(&ts, false);
                e.tweet_id = format!("t{m}-{i}");
                events.push(e);
            }
        }
        // One direct event so the direct history is non-degenerate.
        events.push(ev("2015-06-15T00:00:00Z", true));
        let timeline = build_timeline(events).unwrap();
        let (kept, rejected) = filter_accounts(vec![timeline], &FilterPolicy::default());
        assert!(kept.is_empty());
        assert_eq!(rejected[0].1, RejectReason::TooSporadic);
    }
}
