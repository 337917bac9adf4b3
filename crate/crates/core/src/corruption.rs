//! BERT-style corruption of masked positions.
//!
//! Each masked token independently becomes the mask token (80% by default), a
//! uniform draw from a replacement vocabulary (10%), or stays unchanged (10%).
//! Unmasked positions are copied verbatim. Labels carry the original token at
//! every masked position — including kept ones — and an ignore marker
//! elsewhere, so the training target set always equals the mask set.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use crate::rng::RandomStream;
use crate::types::{CoreError, Mask, TokenSequence};

#[derive(Debug, Error)]
pub enum CorruptionError {
    #[error(transparent)]
    Length(#[from] CoreError),
    #[error("corruption probabilities (mask {p_mask}, random {p_random}, keep {p_keep}) sum to {sum}, not 1")]
    ProbabilitiesDoNotSumToOne {
        p_mask: f64,
        p_random: f64,
        p_keep: f64,
        sum: f64,
    },
    #[error("corruption probability {0} is negative")]
    NegativeProbability(f64),
    #[error("replacement vocabulary is empty but random replacement probability is {0}")]
    EmptyReplacementVocab(f64),
    #[error("failed to read replacement vocabulary: {0}")]
    VocabIo(#[from] std::io::Error),
}

const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// The (mask, random, keep) probabilities plus the tokens random replacement
/// draws from.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionPolicy {
    pub p_mask: f64,
    pub p_random: f64,
    pub p_keep: f64,
    pub mask_token: String,
    pub replacement_vocab: Vec<String>,
}

impl Default for CorruptionPolicy {
    /// The standard 80/10/10 policy with an empty replacement vocabulary;
    /// supply one before use (or zero out `p_random`).
    fn default() -> CorruptionPolicy {
        CorruptionPolicy {
            p_mask: 0.8,
            p_random: 0.1,
            p_keep: 0.1,
            mask_token: "[MASK]".to_string(),
            replacement_vocab: Vec::new(),
        }
    }
}

impl CorruptionPolicy {
    /// Replace every masked token with the mask token, no randomness.
    pub fn mask_only(mask_token: impl Into<String>) -> CorruptionPolicy {
        CorruptionPolicy {
            p_mask: 1.0,
            p_random: 0.0,
            p_keep: 0.0,
            mask_token: mask_token.into(),
            replacement_vocab: Vec::new(),
        }
    }

    pub fn with_replacement_vocab(mut self, vocab: Vec<String>) -> CorruptionPolicy {
        self.replacement_vocab = vocab;
        self
    }

    pub fn validate(&self) -> Result<(), CorruptionError> {
        for p in [self.p_mask, self.p_random, self.p_keep] {
            if p < 0.0 || p.is_nan() {
                return Err(CorruptionError::NegativeProbability(p));
            }
        }
        let sum = self.p_mask + self.p_random + self.p_keep;
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(CorruptionError::ProbabilitiesDoNotSumToOne {
                p_mask: self.p_mask,
                p_random: self.p_random,
                p_keep: self.p_keep,
                sum,
            });
        }
        if self.p_random > 0.0 && self.replacement_vocab.is_empty() {
            return Err(CorruptionError::EmptyReplacementVocab(self.p_random));
        }
        Ok(())
    }
}

/// Load a replacement vocabulary: plain UTF-8 text, one token per line.
/// Blank lines are skipped.
pub fn load_replacement_vocab(path: impl AsRef<Path>) -> Result<Vec<String>, CorruptionError> {
    let reader = BufReader::new(File::open(path)?);
    let mut vocab = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.is_empty() {
            vocab.push(line);
        }
    }
    Ok(vocab)
}

/// A corrupted record: the model inputs plus per-position labels
/// (`Some(original)` exactly at masked positions).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorruptedRecord {
    pub id: String,
    pub corrupted_tokens: Vec<String>,
    pub labels: Vec<Option<String>>,
}

/// Apply the corruption policy to the masked positions of a sequence.
///
/// One uniform draw decides each masked position's branch: mask token below
/// `p_mask`, random replacement below `p_mask + p_random`, kept otherwise.
/// Random replacement consumes one extra draw for the vocabulary index.
pub fn corrupt(
    seq: &TokenSequence,
    mask: &Mask,
    policy: &CorruptionPolicy,
    rng: &mut RandomStream,
) -> Result<CorruptedRecord, CorruptionError> {
    if mask.len() != seq.len() {
        return Err(CoreError::LengthMismatch {
            mask_len: mask.len(),
            seq_len: seq.len(),
        }
        .into());
    }
    policy.validate()?;

    let mut corrupted_tokens = Vec::with_capacity(seq.len());
    let mut labels = Vec::with_capacity(seq.len());
    for (index, token) in seq.tokens.iter().enumerate() {
        if !mask.get(index) {
            corrupted_tokens.push(token.text.clone());
            labels.push(None);
            continue;
        }
        let draw = rng.next_f64();
        let replacement = if draw < policy.p_mask {
            policy.mask_token.clone()
        } else if draw < policy.p_mask + policy.p_random {
            let pick = rng.below(policy.replacement_vocab.len() as u64) as usize;
            policy.replacement_vocab[pick].clone()
        } else {
            token.text.clone()
        };
        corrupted_tokens.push(replacement);
        labels.push(Some(token.text.clone()));
    }
    Ok(CorruptedRecord {
        id: seq.id.clone(),
        corrupted_tokens,
        labels,
    })
}
