//! Ego-network analysis for directed interaction logs.
//!
//! The pipeline turns newline-delimited interaction events (replies, mentions,
//! retweets, plain posts) into layered ego networks and the reports built on
//! top of them:
//!
//! * [`ingest`] — JSONL parsing, monthly activity timelines, account filters.
//! * [`layering`] — contact frequencies and exact 1-D k-means ring detection.
//! * [`stats`] — usage percentages, circle sizes, scaling ratios, population
//!   means with confidence intervals.
//! * [`dynamics`] — windowed turnover (Jaccard and jump indices) and the
//!   static-vs-dynamic correspondence matrix.
//! * [`hashtags`] — activation detection, intensity/diversity indices, growth
//!   series, per-ring comparisons.
//! * [`regression`] — OLS models of contact frequency on the hashtag indices.
//! * [`synth`] — a seeded generator of interaction logs with planted structure,
//!   used as ground truth by the statistical test suites.
//! * [`report`] — deterministic CSV renderings of every report type.

pub mod dynamics;
pub mod hashtags;
pub mod ingest;
pub mod layering;
pub mod model;
pub mod regression;
pub mod report;
pub mod stats;
pub mod synth;

pub use model::{
    AnalysisSpan, Channel, ChannelSelector, InteractionEvent, LayeredEgoNetwork, RingId,
    TieSeries, Window,
};
