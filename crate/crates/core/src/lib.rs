//! Analytics for crisis-time social communication networks.
//!
//! The pipeline turns an event stream (posts, retweets, replies, quotes) into
//! cumulative daily communication graphs and measures:
//!
//! - per-user activity proportions, normalized by a negative-log and Box-Cox
//!   transform and summarized by kernel density estimates ([`activity`]);
//! - converging, self-loop and reciprocal interaction structures
//!   ([`structures`]);
//! - the share of each day's communication pairs that are new ([`graph`]);
//! - PageRank influence, its power-law tail and the flow of content between
//!   influential and ordinary users ([`influence`]);
//! - distance decay of communication frequency and response time across
//!   locations ([`spatial`]).
//!
//! [`synth`] generates event streams with known ground truth and
//! [`report`] runs everything into a single JSON document.

pub mod activity;
pub mod config;
pub mod graph;
pub mod influence;
pub mod ingest;
pub mod report;
pub mod spatial;
pub mod stats;
pub mod structures;
pub mod synth;

pub use graph::{build_daily_snapshots, NetworkSnapshot, SnapshotSeries};
pub use ingest::{ActivityKind, EventRecord};
pub use report::{run_pipeline, ReportConfig, StudyReport};
