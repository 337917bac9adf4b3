//! The five masking strategies, as pure functions from
//! `(sequence, rate, random stream)` to a [`Mask`].
//!
//! Every strategy targets an expected empirical masking rate of `p`; how it
//! gets there differs:
//!
//! - **uniform** — each token is an independent Bernoulli(p) draw.
//! - **whole-word** — one Bernoulli(p) draw per word, shared by the word's
//!   subword tokens.
//! - **noun-verb** — exactly `round(n * p)` tokens, filled by POS priority
//!   (nouns first), sampling inside the category where the budget runs out.
//! - **span** — contiguous runs with truncated-geometric lengths until the
//!   empirical rate reaches `p`.
//! - **pmi** — one Bernoulli(p) draw per PMI n-gram group, shared by all
//!   tokens of the group's words.

use thiserror::Error;

use crate::pmi::{segment_by_ngrams, PmiVocabulary};
use crate::rng::{RandomStream, StreamPurpose};
use crate::types::{
    CoreError, InvalidRate, Mask, MaskingConfig, POSCategory, Strategy, TokenSequence,
};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Sequence(#[from] CoreError),
    #[error(transparent)]
    Rate(#[from] InvalidRate),
    #[error("pmi strategy requires a vocabulary")]
    MissingPmiVocab,
    #[error("invalid span params: {0}")]
    InvalidSpanParams(String),
}

/// Span length distribution: geometric with success probability
/// `geometric_success`, truncated to `1..=max_len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanParams {
    pub geometric_success: f64,
    pub max_len: usize,
}

impl Default for SpanParams {
    fn default() -> SpanParams {
        SpanParams {
            geometric_success: 0.2,
            max_len: 10,
        }
    }
}

impl SpanParams {
    pub fn validate(&self) -> Result<(), StrategyError> {
        if !(self.geometric_success > 0.0 && self.geometric_success < 1.0) {
            return Err(StrategyError::InvalidSpanParams(format!(
                "geometric success probability {} is outside (0, 1)",
                self.geometric_success
            )));
        }
        if self.max_len < 1 {
            return Err(StrategyError::InvalidSpanParams(
                "max span length must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One truncated-geometric span length draw, by inverse CDF over the
/// `max_len`-point table: `P(X = k)` proportional to `(1-q)^(k-1) * q`.
pub fn sample_span_length(params: SpanParams, rng: &mut RandomStream) -> usize {
    let q = params.geometric_success;
    let normalizer = 1.0 - (1.0 - q).powi(params.max_len as i32);
    let draw = rng.next_f64();
    let mut cumulative = 0.0;
    for len in 1..params.max_len {
        cumulative += (1.0 - q).powi(len as i32 - 1) * q / normalizer;
        if draw < cumulative {
            return len;
        }
    }
    params.max_len
}

/// Each token masked independently with probability `p`.
pub fn mask_uniform(seq: &TokenSequence, p: f64, rng: &mut RandomStream) -> Mask {
    Mask::from_bits(seq.tokens.iter().map(|_| rng.bernoulli(p)).collect())
}

/// One Bernoulli(p) draw per word; a word's tokens all share its bit.
pub fn mask_whole_word(
    seq: &TokenSequence,
    p: f64,
    rng: &mut RandomStream,
) -> Result<Mask, CoreError> {
    let mut mask = Mask::all_false(seq.len());
    for group in seq.word_groups()? {
        if rng.bernoulli(p) {
            for index in group {
                mask.set(index, true);
            }
        }
    }
    Ok(mask)
}

/// Mask exactly `round(n * p)` tokens in POS priority order (half-up
/// rounding). Categories are exhausted whole; the category where the budget
/// runs out contributes a uniformly random subset.
pub fn mask_noun_verb(seq: &TokenSequence, p: f64, rng: &mut RandomStream) -> Mask {
    let n = seq.len();
    let mut mask = Mask::all_false(n);
    let budget = ((n as f64 * p) + 0.5).floor() as usize;
    let mut remaining = budget.min(n);
    for category in POSCategory::ALL {
        if remaining == 0 {
            break;
        }
        let bucket: Vec<usize> = (0..n).filter(|&i| seq.tokens[i].pos == category).collect();
        if bucket.is_empty() {
            continue;
        }
        if bucket.len() <= remaining {
            for &index in &bucket {
                mask.set(index, true);
            }
            remaining -= bucket.len();
        } else {
            for picked in rng.choose_k(bucket.len(), remaining) {
                mask.set(bucket[picked], true);
            }
            remaining = 0;
        }
    }
    mask
}

/// Repeatedly mask `[start, start+len)` runs — uniform start, truncated
/// geometric length, clipped at the sequence end — until the empirical rate
/// reaches `p`. Overlapping draws are allowed and simply add fewer new bits.
pub fn mask_span(seq: &TokenSequence, p: f64, rng: &mut RandomStream, params: SpanParams) -> Mask {
    let n = seq.len();
    let mut mask = Mask::all_false(n);
    if n == 0 {
        return mask;
    }
    let mut masked = 0usize;
    while (masked as f64 / n as f64) < p {
        let start = rng.below(n as u64) as usize;
        let len = sample_span_length(params, rng);
        for index in start..(start + len).min(n) {
            if !mask.get(index) {
                mask.set(index, true);
                masked += 1;
            }
        }
    }
    mask
}

/// Segment the words against the PMI vocabulary, then give each group one
/// Bernoulli(p) draw shared by all tokens of its words. With an empty
/// vocabulary every group is a single word and the behavior is exactly
/// whole-word masking.
pub fn mask_pmi(
    seq: &TokenSequence,
    p: f64,
    rng: &mut RandomStream,
    vocab: &PmiVocabulary,
) -> Result<Mask, CoreError> {
    let token_groups = seq.word_groups()?;
    let segmentation = segment_by_ngrams(seq, vocab)?;
    let mut mask = Mask::all_false(seq.len());
    for group in &segmentation.groups {
        if rng.bernoulli(p) {
            for word in group.clone() {
                for index in token_groups[word].clone() {
                    mask.set(index, true);
                }
            }
        }
    }
    Ok(mask)
}

/// Everything a [`MaskingConfig`] may need beyond the sequence itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct StrategyContext<'a> {
    pub pmi_vocab: Option<&'a PmiVocabulary>,
    pub span: Option<SpanParams>,
}

impl<'a> StrategyContext<'a> {
    pub fn with_vocab(vocab: &'a PmiVocabulary) -> StrategyContext<'a> {
        StrategyContext {
            pmi_vocab: Some(vocab),
            span: None,
        }
    }
}

/// Mask one record under a config: validates the config, derives the
/// record's masking stream from `(global_seed, id)`, and dispatches.
pub fn apply_strategy(
    seq: &TokenSequence,
    cfg: &MaskingConfig,
    ctx: &StrategyContext<'_>,
) -> Result<Mask, StrategyError> {
    cfg.validate()?;
    let span = ctx.span.unwrap_or_default();
    span.validate()?;
    if cfg.strategy == Strategy::Pmi && ctx.pmi_vocab.is_none() {
        return Err(StrategyError::MissingPmiVocab);
    }
    let mut rng = RandomStream::for_record(cfg.global_seed, &seq.id, StreamPurpose::Masking);
    let mask = match cfg.strategy {
        Strategy::Uniform => mask_uniform(seq, cfg.rate, &mut rng),
        Strategy::WholeWord => mask_whole_word(seq, cfg.rate, &mut rng)?,
        Strategy::NounVerb => mask_noun_verb(seq, cfg.rate, &mut rng),
        Strategy::Span => mask_span(seq, cfg.rate, &mut rng, span),
        Strategy::Pmi => mask_pmi(seq, cfg.rate, &mut rng, ctx.pmi_vocab.unwrap())?,
    };
    Ok(mask)
}
