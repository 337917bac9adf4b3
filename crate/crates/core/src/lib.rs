//! Masking-strategy toolkit for masked language modeling (MLM) data preparation.
//!
//! The crate covers the full path from an annotated corpus to model-ready
//! training records:
//!
//! - [`types`] — token sequences, masks, and the masking configuration.
//! - [`rng`] — the deterministic per-record random stream every strategy draws from.
//! - [`strategies`] — five masking strategies (uniform, whole-word, noun-verb,
//!   span, PMI) parameterized by a masking rate `p`.
//! - [`pmi`] — PMI n-gram vocabulary construction and greedy segmentation.
//! - [`corruption`] — the 80/10/10 mask/random/keep corruption scheme.
//! - [`pipeline`] — a streaming, order-preserving, multi-worker corpus pipeline.
//! - [`analysis`] — sweep-result analysis: score deltas with SEM and the
//!   reference-strategy competitiveness probability.
//!
//! Everything downstream of the input bytes and the configuration is
//! deterministic: masks depend only on `(global_seed, record id, config)`,
//! never on worker count or processing order.

pub mod analysis;
pub mod corruption;
pub mod pipeline;
pub mod pmi;
pub mod rng;
pub mod strategies;
pub mod types;

pub use corruption::{CorruptedRecord, CorruptionPolicy};
pub use pmi::{NgramCounts, PmiVocabulary, Segmentation};
pub use rng::RandomStream;
pub use strategies::{SpanParams, StrategyContext};
pub use types::{Mask, MaskingConfig, POSCategory, Strategy, Token, TokenSequence};
