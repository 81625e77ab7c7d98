//! Batch analytics over archived tweet streams: cascade reconstruction,
//! source-list labeling, a recurrent cascade classifier, political-leaning
//! inference on the retweet graph, conspiracy-cohort analytics, regression
//! discontinuity estimates of platform interventions, topic clustering, and
//! propagation-dynamics metrics.
//!
//! The pipeline is deterministic: every random draw flows from explicit
//! seeds, and no stage reads the wall clock.

pub mod cascades;
pub mod cohort;
pub mod detector;
pub mod error;
pub mod ingest;
pub mod labeling;
pub mod leaning;
pub mod rdd;
pub mod rng;
pub mod synth;
pub mod topics;

pub use cascades::{Cascade, CascadeEvent, CascadeLabel, PropagationMetrics, PropagationTree};
pub use detector::{DetectorConfig, DetectorModel, FoldReport};
pub use error::{Error, Result};
pub use ingest::{StreamStats, TweetRecord, TweetType};
pub use labeling::SourceList;
pub use leaning::{LeaningAssignment, RetweetGraph, SeedLabel, Side};
pub use rdd::{EffectClass, HashtagSeries, RddFit};
pub use topics::{EmbeddingTable, TopicModel};
