//! Seeded generator of interaction logs with planted ring structure, churn,
//! and hashtag behavior.
//!
//! Every statistical claim the test suites make is checked against the
//! ground truth this generator records: which ring each tie sits in per
//! window, whether it was activated by a hashtag, and how often the
//! activating tag was used.
//!
//! Each ego is generated from its own ChaCha8 stream derived from the master
//! seed, so output is deterministic and independent of scheduling order.

use chrono::{DateTime, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::event_to_record;
use crate::model::{month_start, Channel, InteractionEvent};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

/// Probability that an activated tie repeats its activating tag on a later
/// tweet.
const REPEAT_TAG_PROB: f64 = 0.3;
/// Probability that any non-first tweet carries an unrelated vocabulary tag.
const BACKGROUND_TAG_PROB: f64 = 0.1;
/// All synthetic histories start here.
const EPOCH_MONTH: (i32, u32) = (2015, 1);
/// Churn boundaries fall on disjoint windows of this length.
const WINDOW_MONTHS: u32 = 12;

/// Generator parameters.
///
/// `ring_sizes` are cumulative circle-size targets; each ego realizes its own
/// ladder around the implied adjacent-circle ratios (the innermost circle is
/// jittered between the target and target + 1), so the planted population has
/// near-constant scaling ratios rather than a single fixed shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_egos: usize,
    pub ring_sizes: [u32; 5],
    /// Contacts/year of the innermost ring.
    pub ring_base_freq: f64,
    /// Rate ratio between adjacent rings.
    pub freq_decay: f64,
    pub duration_months: u32,
    /// Per-ring probability that an alter is replaced at each disjoint-window
    /// boundary.
    pub churn_per_ring: [f64; 5],
    /// Probability that a tie's first tweet carries a hashtag.
    pub activation_prob: f64,
    pub hashtag_vocab_size: usize,
    /// Two-state monthly rate modulation emulating bursty posting.
    pub bursty: bool,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_egos: 60,
            ring_sizes: [1, 5, 15, 50, 150],
            ring_base_freq: 81.0,
            freq_decay: 3.0,
            duration_months: 48,
            churn_per_ring: [0.0; 5],
            activation_prob: 0.2,
            hashtag_vocab_size: 500,
            bursty: false,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn with_uniform_churn(mut self, churn: f64) -> Self {
        self.churn_per_ring = [churn; 5];
        self
    }

    fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: &str| Err(SynthError::InvalidConfig(msg.into()));
        if self.n_egos == 0 {
            return fail("n_egos must be positive");
        }
        if self.duration_months == 0 {
            return fail("duration_months must be positive");
        }
        if self.hashtag_vocab_size == 0 {
            return fail("hashtag_vocab_size must be positive");
        }
        if !(self.freq_decay > 1.0) {
            return fail("freq_decay must exceed 1");
        }
        if self.ring_base_freq / self.freq_decay.powi(4) < 1.0 {
            return fail("outermost ring rate falls below one contact per year");
        }
        if self.ring_sizes.windows(2).any(|w| w[0] >= w[1]) || self.ring_sizes[0] == 0 {
            return fail("ring_sizes must be strictly increasing and positive");
        }
        for p in self.churn_per_ring.iter().chain([&self.activation_prob]) {
            if !(0.0..=1.0).contains(p) {
                return fail("probabilities must lie in [0, 1]");
            }
        }
        Ok(())
    }

    /// Contacts/year of ring `r` (1-based).
    pub fn ring_rate(&self, ring: u8) -> f64 {
        self.ring_base_freq / self.freq_decay.powi(ring as i32 - 1)
    }
}

/// Planted truth for one tie.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieTruth {
    pub alter_id: String,
    /// Planted ring position, 1..=5.
    pub ring: u8,
    /// Ring per disjoint window; 0 where the tie was not alive.
    pub ring_by_window: Vec<u8>,
    pub activated: bool,
    pub activating_tag: Option<String>,
    /// Tweets on the tie carrying the activating tag.
    pub activating_tag_tweets: usize,
    pub n_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoTruth {
    pub ego_id: String,
    pub circle_sizes: [usize; 5],
    pub ties: Vec<TieTruth>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    /// PRNG algorithm; the seed fully determines the output.
    pub rng_algorithm: String,
    pub window_months: u32,
    pub n_windows: usize,
    pub config: SynthConfig,
    pub egos: Vec<EgoTruth>,
}

struct TieState {
    alter_id: String,
    ring: u8,
    activated: bool,
    tag: Option<String>,
    first_window: usize,
    emitted_any: bool,
    tag_tweets: usize,
    n_events: usize,
    retired_after: Option<usize>,
}

/// Generates a synthetic event log plus its ground truth.
pub fn generate(config: &SynthConfig) -> Result<(Vec<InteractionEvent>, GroundTruth), SynthError> {
    config.validate()?;
    let epoch = Utc
        .with_ymd_and_hms(EPOCH_MONTH.0, EPOCH_MONTH.1, 1, 0, 0, 0)
        .unwrap();
    let epoch_month = crate::model::month_index(epoch);
    let n_windows = (config.duration_months / WINDOW_MONTHS) as usize;

    let mut events = Vec::new();
    let mut egos = Vec::new();
    for ego_index in 0..config.n_egos {
        let (mut ego_events, truth) = generate_ego(config, ego_index, epoch_month, n_windows);
        ego_events.sort_by(|a, b| (a.timestamp, &a.tweet_id).cmp(&(b.timestamp, &b.tweet_id)));
        events.append(&mut ego_events);
        egos.push(truth);
    }
    Ok((
        events,
        GroundTruth {
            seed: config.seed,
            rng_algorithm: "chacha8".into(),
            window_months: WINDOW_MONTHS,
            n_windows,
            config: config.clone(),
            egos,
        },
    ))
}

/// Generates the JSONL event file (one record per event) plus ground truth.
pub fn generate_jsonl(config: &SynthConfig) -> Result<(String, GroundTruth), SynthError> {
    let (events, truth) = generate(config)?;
    let mut out = String::new();
    for event in &events {
        out.push_str(&serde_json::to_string(&event_to_record(event)).expect("serializable"));
        out.push('\n');
    }
    Ok((out, truth))
}

fn generate_ego(
    config: &SynthConfig,
    ego_index: usize,
    epoch_month: i32,
    n_windows: usize,
) -> (Vec<InteractionEvent>, EgoTruth) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(ego_index as u64);
    let ego_id = format!("e{ego_index:04}");

    let circle_sizes = draw_circle_ladder(config, &mut rng);
    let mut next_alter = 0usize;
    let spawn = |ring: u8, window: usize, rng: &mut ChaCha8Rng, next_alter: &mut usize| {
        let activated = rng.random_bool(config.activation_prob);
        let tag =
            activated.then(|| format!("tag{}", rng.random_range(0..config.hashtag_vocab_size)));
        let id = format!("e{ego_index:04}-a{:05}", *next_alter);
        *next_alter += 1;
        TieState {
            alter_id: id,
            ring,
            activated,
            tag,
            first_window: window,
            emitted_any: false,
            tag_tweets: 0,
            n_events: 0,
            retired_after: None,
        }
    };

    let mut ties: Vec<TieState> = Vec::new();
    let mut prev = 0;
    for (ring_idx, &cum) in circle_sizes.iter().enumerate() {
        for _ in prev..cum {
            let tie = spawn(ring_idx as u8 + 1, 0, &mut rng, &mut next_alter);
            ties.push(tie);
        }
        prev = cum;
    }

    // Monthly rate multipliers for the bursty variant: a two-state chain
    // switching with probability 0.25, high state at three times the rate.
    let burst_multiplier: Vec<f64> = if config.bursty {
        let mut state_high = false;
        (0..config.duration_months)
            .map(|_| {
                if rng.random_bool(0.25) {
                    state_high = !state_high;
                }
                if state_high {
                    3.0
                } else {
                    0.8
                }
            })
            .collect()
    } else {
        vec![1.0; config.duration_months as usize]
    };

    let mut events = Vec::new();
    let mut tweet_counter = 0usize;
    // Generation proceeds window by window so churn can retire and replace
    // ties at the boundaries. The trailing partial window (when the duration
    // is not a multiple of a year) still produces events.
    let total_months = config.duration_months;
    let mut boundaries: Vec<(u32, u32)> = (0..n_windows)
        .map(|w| (w as u32 * WINDOW_MONTHS, (w as u32 + 1) * WINDOW_MONTHS))
        .collect();
    if (n_windows as u32) * WINDOW_MONTHS < total_months {
        boundaries.push((n_windows as u32 * WINDOW_MONTHS, total_months));
    }

    for (period, &(m0, m1)) in boundaries.iter().enumerate() {
        let start = month_start(epoch_month + m0 as i32);
        let end = month_start(epoch_month + m1 as i32);
        for tie in ties.iter_mut().filter(|t| t.retired_after.is_none()) {
            let rate = config.ring_rate(tie.ring);
            let times = if config.bursty {
                bursty_event_times(&mut rng, rate, epoch_month, m0, m1, &burst_multiplier)
            } else {
                poisson_event_times(&mut rng, rate, start, end)
            };
            let mut last_second = i64::MIN;
            for t in times {
                // Second resolution with strictly increasing per-tie stamps,
                // so the first contact of a tie is unambiguous.
                let second = (t as i64).max(last_second + 1);
                last_second = second;
                let ts = Utc.timestamp_opt(second, 0).single().expect("in-range");
                let mut hashtags = Vec::new();
                if !tie.emitted_any {
                    tie.emitted_any = true;
                    if let Some(tag) = &tie.tag {
                        hashtags.push(tag.clone());
                    }
                } else {
                    if let Some(tag) = &tie.tag {
                        if rng.random_bool(REPEAT_TAG_PROB) {
                            hashtags.push(tag.clone());
                        }
                    }
                    if rng.random_bool(BACKGROUND_TAG_PROB) {
                        hashtags.push(format!(
                            "tag{}",
                            rng.random_range(0..config.hashtag_vocab_size)
                        ));
                    }
                }
                if let Some(tag) = &tie.tag {
                    if hashtags.iter().any(|h| h == tag) {
                        tie.tag_tweets += 1;
                    }
                }
                tie.n_events += 1;
                let channel = match rng.random_range(0..3) {
                    0 => Channel::Reply,
                    1 => Channel::Mention,
                    _ => Channel::Retweet,
                };
                let event = InteractionEvent::new(
                    format!("{ego_id}-t{tweet_counter:06}"),
                    ego_id.clone(),
                    Some(tie.alter_id.clone()),
                    channel,
                    ts,
                    hashtags,
                )
                .expect("generated events satisfy the invariants");
                tweet_counter += 1;
                events.push(event);
            }
        }

        // Replacement churn at boundaries between full windows.
        let at_full_boundary = period + 1 < n_windows;
        if at_full_boundary {
            let mut replacements = Vec::new();
            for tie in ties.iter_mut().filter(|t| t.retired_after.is_none()) {
                let churn = config.churn_per_ring[tie.ring as usize - 1];
                if churn > 0.0 && rng.random_bool(churn) {
                    tie.retired_after = Some(period);
                    replacements.push((tie.ring, period + 1));
                }
            }
            for (ring, window) in replacements {
                let tie = spawn(ring, window, &mut rng, &mut next_alter);
                ties.push(tie);
            }
        }
    }

    let truth = EgoTruth {
        ego_id,
        circle_sizes: {
            let mut s = [0usize; 5];
            s.copy_from_slice(&circle_sizes);
            s
        },
        ties: ties
            .into_iter()
            .map(|t| {
                let alive_until = t.retired_after.unwrap_or(n_windows.saturating_sub(1));
                TieTruth {
                    ring_by_window: (0..n_windows)
                        .map(|w| {
                            if w >= t.first_window && w <= alive_until {
                                t.ring
                            } else {
                                0
                            }
                        })
                        .collect(),
                    alter_id: t.alter_id,
                    ring: t.ring,
                    activated: t.activated,
                    activating_tag: t.tag,
                    activating_tag_tweets: t.tag_tweets,
                    n_events: t.n_events,
                }
            })
            .collect(),
    };
    (events, truth)
}

/// Per-ego circle ladder: the innermost circle flips between the target and
/// target + 1; each following circle multiplies by the target ratio with a
/// +/-10% jitter. Every ring keeps at least one member.
fn draw_circle_ladder(config: &SynthConfig, rng: &mut ChaCha8Rng) -> [usize; 5] {
    let targets = config.ring_sizes;
    let mut circles = [0usize; 5];
    circles[0] = targets[0] as usize + usize::from(rng.random_bool(0.5));
    for i in 1..5 {
        let base = if i == 1 {
            // Ratio against the jittered innermost mean, not the raw target.
            targets[1] as f64 / (targets[0] as f64 + 0.5)
        } else {
            targets[i] as f64 / targets[i - 1] as f64
        };
        let jitter = rng.random_range(0.9..1.1);
        let next = (circles[i - 1] as f64 * base * jitter).round() as usize;
        circles[i] = next.max(circles[i - 1] + 1);
    }
    circles
}

/// Homogeneous Poisson arrival times (as epoch seconds, fractional) over
/// `[start, end)` at `rate` events per 365-day year.
fn poisson_event_times(
    rng: &mut ChaCha8Rng,
    rate: f64,
    start: DateTime<Utc>,
    end: DateTime<Utc>,
) -> Vec<f64> {
    let rate_per_second = rate / (365.0 * 86_400.0);
    let exp = Exp::new(rate_per_second).expect("positive rate");
    let mut times = Vec::new();
    let mut t = start.timestamp() as f64;
    let end_s = end.timestamp() as f64;
    loop {
        t += exp.sample(rng);
        if t >= end_s {
            break;
        }
        times.push(t);
    }
    times
}

/// Month-bucketed counts with uniform placement, modulated by the burst
/// multiplier of each month.
fn bursty_event_times(
    rng: &mut ChaCha8Rng,
    rate: f64,
    epoch_month: i32,
    m0: u32,
    m1: u32,
    multiplier: &[f64],
) -> Vec<f64> {
    let mut times = Vec::new();
    for m in m0..m1 {
        let start = month_start(epoch_month + m as i32).timestamp() as f64;
        let end = month_start(epoch_month + m as i32 + 1).timestamp() as f64;
        let days = (end - start) / 86_400.0;
        let lambda = rate / 365.0 * days * multiplier[m as usize];
        let count = if lambda > 0.0 {
            Poisson::new(lambda).expect("positive lambda").sample(rng) as usize
        } else {
            0
        };
        for _ in 0..count {
            times.push(rng.random_range(start..end));
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times
}
