//! Shared domain types: token sequences, masks, and masking configuration.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("empty mask has no masking rate")]
    EmptyMask,
    #[error("mask length {mask_len} does not match sequence length {seq_len}")]
    LengthMismatch { mask_len: usize, seq_len: usize },
    #[error("token {index} has empty text")]
    EmptyTokenText { index: usize },
    #[error("token {index}: word index {found} breaks the gapless 0-based word order (previous was {previous})")]
    WordIndexGap {
        index: usize,
        previous: i64,
        found: u32,
    },
}

/// Part-of-speech category of a token.
///
/// Variant order is the masking priority used by the noun-verb strategy:
/// nouns first, then proper nouns, verbs, adjectives, adverbs, and finally
/// everything else. The derived `Ord` follows that order (`Noun` sorts first).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum POSCategory {
    Noun,
    ProperNoun,
    Verb,
    Adjective,
    Adverb,
    Other,
}

impl POSCategory {
    pub const ALL: [POSCategory; 6] = [
        POSCategory::Noun,
        POSCategory::ProperNoun,
        POSCategory::Verb,
        POSCategory::Adjective,
        POSCategory::Adverb,
        POSCategory::Other,
    ];

    /// Priority rank, 0 = masked first.
    pub fn priority(self) -> usize {
        self as usize
    }

    /// Parse a POS tag string. Accepts UPOS-style tags and spelled-out names,
    /// case-insensitively: `NOUN`, `PROPN`/`proper_noun`/`proper-noun`,
    /// `VERB`, `ADJ`/`adjective`, `ADV`/`adverb`, `OTHER`/`X`.
    ///
    /// Returns `None` for unknown tags so callers can decide how to handle
    /// them (the pipeline maps unknowns to [`POSCategory::Other`] and counts
    /// a warning).
    pub fn parse(tag: &str) -> Option<POSCategory> {
        match tag.to_ascii_lowercase().as_str() {
            "noun" => Some(POSCategory::Noun),
            "propn" | "proper_noun" | "proper-noun" | "propernoun" => Some(POSCategory::ProperNoun),
            "verb" => Some(POSCategory::Verb),
            "adj" | "adjective" => Some(POSCategory::Adjective),
            "adv" | "adverb" => Some(POSCategory::Adverb),
            "other" | "x" => Some(POSCategory::Other),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            POSCategory::Noun => "NOUN",
            POSCategory::ProperNoun => "PROPN",
            POSCategory::Verb => "VERB",
            POSCategory::Adjective => "ADJ",
            POSCategory::Adverb => "ADV",
            POSCategory::Other => "OTHER",
        }
    }
}

impl fmt::Display for POSCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One subword token with its word id and POS tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub word_index: u32,
    pub pos: POSCategory,
}

impl Token {
    pub fn new(text: impl Into<String>, word_index: u32, pos: POSCategory) -> Token {
        Token {
            text: text.into(),
            word_index,
            pos,
        }
    }
}

/// The tokens of one record, with word-boundary and POS annotations.
///
/// Word indices must be non-decreasing, start at 0, and have no gaps, so every
/// word is a contiguous token run. Use [`TokenSequence::validate`] to check a
/// sequence built from untrusted input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub id: String,
    pub tokens: Vec<Token>,
}

/// WordPiece continuation prefix stripped when recovering word surface forms.
pub const SUBWORD_PREFIX: &str = "##";

impl TokenSequence {
    pub fn new(id: impl Into<String>, tokens: Vec<Token>) -> Result<TokenSequence, CoreError> {
        let seq = TokenSequence {
            id: id.into(),
            tokens,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Check the sequence invariants: non-empty token texts and a gapless,
    /// non-decreasing, 0-based word index map.
    pub fn validate(&self) -> Result<(), CoreError> {
        let mut previous: i64 = -1;
        for (index, token) in self.tokens.iter().enumerate() {
            if token.text.is_empty() {
                return Err(CoreError::EmptyTokenText { index });
            }
            let found = token.word_index;
            if i64::from(found) != previous && i64::from(found) != previous + 1 {
                return Err(CoreError::WordIndexGap {
                    index,
                    previous,
                    found,
                });
            }
            previous = i64::from(found);
        }
        Ok(())
    }

    /// Token-index groups, one per word, in word order.
    ///
    /// The groups partition `0..len()`; tokens in one group share a word
    /// index. Errors if the word-index invariant does not hold.
    pub fn word_groups(&self) -> Result<Vec<Range<usize>>, CoreError> {
        self.validate()?;
        let mut groups = Vec::new();
        let mut start = 0usize;
        for i in 1..self.tokens.len() {
            if self.tokens[i].word_index != self.tokens[start].word_index {
                groups.push(start..i);
                start = i;
            }
        }
        if !self.tokens.is_empty() {
            groups.push(start..self.tokens.len());
        }
        Ok(groups)
    }

    /// Number of words.
    pub fn word_count(&self) -> usize {
        self.tokens
            .last()
            .map(|t| t.word_index as usize + 1)
            .unwrap_or(0)
    }

    /// Word surface forms: per word, the concatenation of its token texts
    /// with the `##` continuation prefix stripped from non-initial tokens.
    ///
    /// Inputs arrive already normalized by their tokenizer, so no further
    /// case folding is applied. PMI vocabularies must be built over the same
    /// surface forms used at masking time.
    pub fn word_surfaces(&self) -> Result<Vec<String>, CoreError> {
        let groups = self.word_groups()?;
        let mut words = Vec::with_capacity(groups.len());
        for group in groups {
            let mut surface = String::new();
            for (offset, token) in self.tokens[group].iter().enumerate() {
                let text = token.text.as_str();
                if offset > 0 {
                    surface.push_str(text.strip_prefix(SUBWORD_PREFIX).unwrap_or(text));
                } else {
                    surface.push_str(text);
                }
            }
            words.push(surface);
        }
        Ok(words)
    }
}

/// Binary mask aligned to a [`TokenSequence`]: bit `i` is true when token `i`
/// is selected for corruption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    bits: Vec<bool>,
}

impl Mask {
    pub fn from_bits(bits: Vec<bool>) -> Mask {
        Mask { bits }
    }

    pub fn all_false(len: usize) -> Mask {
        Mask {
            bits: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    /// Number of set bits.
    pub fn count_masked(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Empirical masking rate: set bits divided by length.
    ///
    /// Errors on an empty mask, whose rate is undefined.
    pub fn empirical_rate(&self) -> Result<f64, CoreError> {
        if self.bits.is_empty() {
            return Err(CoreError::EmptyMask);
        }
        Ok(self.count_masked() as f64 / self.bits.len() as f64)
    }
}

impl From<Vec<bool>> for Mask {
    fn from(bits: Vec<bool>) -> Mask {
        Mask { bits }
    }
}

/// Masking strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Uniform,
    WholeWord,
    NounVerb,
    Span,
    Pmi,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Uniform,
        Strategy::WholeWord,
        Strategy::NounVerb,
        Strategy::Span,
        Strategy::Pmi,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::WholeWord => "whole-word",
            Strategy::NounVerb => "noun-verb",
            Strategy::Span => "span",
            Strategy::Pmi => "pmi",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown strategy {0:?} (expected uniform, whole-word, noun-verb, span, or pmi)")]
pub struct ParseStrategyError(pub String);

impl FromStr for Strategy {
    type Err = ParseStrategyError;

    fn from_str(s: &str) -> Result<Strategy, ParseStrategyError> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "uniform" => Ok(Strategy::Uniform),
            "whole-word" | "wholeword" => Ok(Strategy::WholeWord),
            "noun-verb" | "nounverb" => Ok(Strategy::NounVerb),
            "span" => Ok(Strategy::Span),
            "pmi" => Ok(Strategy::Pmi),
            _ => Err(ParseStrategyError(s.to_string())),
        }
    }
}

/// Strategy, target masking rate, and the global seed that keys every
/// per-record random stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskingConfig {
    pub strategy: Strategy,
    pub rate: f64,
    pub global_seed: u64,
}

impl MaskingConfig {
    pub fn new(strategy: Strategy, rate: f64, global_seed: u64) -> MaskingConfig {
        MaskingConfig {
            strategy,
            rate,
            global_seed,
        }
    }

    pub fn validate(&self) -> Result<(), InvalidRate> {
        if self.rate.is_finite() && (0.0..=1.0).contains(&self.rate) {
            Ok(())
        } else {
            Err(InvalidRate(self.rate))
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("masking rate {0} is outside [0, 1]")]
pub struct InvalidRate(pub f64);
