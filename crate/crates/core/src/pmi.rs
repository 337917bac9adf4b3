//! PMI n-gram vocabulary construction and greedy segmentation.
//!
//! The vocabulary is built from word-level n-gram statistics of a corpus.
//! An n-gram's PMI is its joint probability divided by the minimum, over all
//! contiguous partitions into two or more parts, of the product of the parts'
//! probabilities. Probabilities are maximum-likelihood: occurrence count over
//! the number of same-length positions in the corpus. Per n-gram length, the
//! top `top_k` n-grams by PMI form the vocabulary.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use thiserror::Error;

use crate::types::{CoreError, TokenSequence};

/// Vocabulary n-gram lengths: 2 through 5 words.
pub const MIN_NGRAM_LEN: usize = 2;
pub const MAX_NGRAM_LEN: usize = 5;

/// Per-length vocabulary cutoff.
pub const DEFAULT_TOP_K: usize = 800_000;

/// Occurrence floor below which an n-gram is not scored.
pub const DEFAULT_MIN_COUNT: u64 = 10;

const VOCAB_FILE_MAGIC: &str = "maskmill-pmi-vocab v1";

#[derive(Debug, Error)]
pub enum PmiError {
    #[error("ngram length {len} is outside the supported range 2..={n_max}")]
    UnsupportedLength { len: usize, n_max: usize },
    #[error("PMI is undefined for {ngram:?}: a required span has zero probability")]
    UndefinedScore { ngram: String },
    #[error("vocabulary word {word:?} contains whitespace and cannot be persisted")]
    UnencodableWord { word: String },
    #[error("vocabulary file line {line}: {reason}")]
    VocabFormat { line: u64, reason: String },
    #[error(transparent)]
    Sequence(#[from] CoreError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Additive word n-gram statistics for lengths `1..=n_max`.
///
/// Counts from corpus shards merge exactly, so parallel counting followed by
/// [`NgramCounts::merge`] equals a single pass in any order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramCounts {
    n_max: usize,
    // counts[i] and totals[i] cover n-grams of length i + 1
    counts: Vec<HashMap<Vec<String>, u64>>,
    totals: Vec<u64>,
}

impl NgramCounts {
    pub fn new(n_max: usize) -> NgramCounts {
        assert!(n_max >= 1, "n_max must be at least 1");
        NgramCounts {
            n_max,
            counts: vec![HashMap::new(); n_max],
            totals: vec![0; n_max],
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Unigram positions counted so far.
    pub fn total_tokens(&self) -> u64 {
        self.totals[0]
    }

    /// Number of length-`n` positions counted so far.
    pub fn total_positions(&self, n: usize) -> u64 {
        self.totals.get(n - 1).copied().unwrap_or(0)
    }

    pub fn count(&self, ngram: &[String]) -> u64 {
        self.counts
            .get(ngram.len().wrapping_sub(1))
            .and_then(|m| m.get(ngram))
            .copied()
            .unwrap_or(0)
    }

    pub fn distinct(&self, n: usize) -> usize {
        self.counts.get(n - 1).map(|m| m.len()).unwrap_or(0)
    }

    /// Count every contiguous n-gram of one sequence's words, n = 1..=n_max.
    /// N-grams never cross sequence boundaries.
    pub fn add_words(&mut self, words: &[String]) {
        for n in 1..=self.n_max {
            if words.len() < n {
                break;
            }
            let (map, total) = {
                let idx = n - 1;
                (&mut self.counts[idx], &mut self.totals[idx])
            };
            for window in words.windows(n) {
                *map.entry(window.to_vec()).or_insert(0) += 1;
                *total += 1;
            }
        }
    }

    pub fn add_sequence(&mut self, seq: &TokenSequence) -> Result<(), CoreError> {
        let words = seq.word_surfaces()?;
        self.add_words(&words);
        Ok(())
    }

    /// Fold another shard's counts into this one. Both shards must have been
    /// counted with the same `n_max`.
    pub fn merge(&mut self, other: NgramCounts) {
        assert_eq!(
            self.n_max, other.n_max,
            "cannot merge counts with different n_max"
        );
        for (mine, theirs) in self.counts.iter_mut().zip(other.counts) {
            for (ngram, c) in theirs {
                *mine.entry(ngram).or_insert(0) += c;
            }
        }
        for (mine, theirs) in self.totals.iter_mut().zip(other.totals) {
            *mine += theirs;
        }
    }

    fn probability(&self, ngram: &[String]) -> Option<f64> {
        let count = self.count(ngram);
        if count == 0 {
            return None;
        }
        Some(count as f64 / self.total_positions(ngram.len()) as f64)
    }
}

/// Count every contiguous word n-gram of a corpus, n = 1..=n_max.
pub fn count_ngrams<'a, I>(corpus: I, n_max: usize) -> Result<NgramCounts, CoreError>
where
    I: IntoIterator<Item = &'a TokenSequence>,
{
    let mut counts = NgramCounts::new(n_max);
    for seq in corpus {
        counts.add_sequence(seq)?;
    }
    Ok(counts)
}

/// PMI of an n-gram under the given counts.
///
/// Numerator: the n-gram's own probability. Denominator: the minimum over all
/// contiguous partitions into at least two parts of the product of part
/// probabilities, each product accumulated left to right. Any zero-probability
/// span makes the score undefined, which is reported as
/// [`PmiError::UndefinedScore`] rather than a sentinel value.
pub fn pmi_score(ngram: &[String], counts: &NgramCounts) -> Result<f64, PmiError> {
    let len = ngram.len();
    if !(MIN_NGRAM_LEN..=counts.n_max.min(MAX_NGRAM_LEN)).contains(&len) {
        return Err(PmiError::UnsupportedLength {
            len,
            n_max: counts.n_max.min(MAX_NGRAM_LEN),
        });
    }
    let undefined = || PmiError::UndefinedScore {
        ngram: ngram.join(" "),
    };
    let joint = counts.probability(ngram).ok_or_else(undefined)?;

    // Split points sit between adjacent words; a non-empty subset of the
    // len-1 points gives a partition into >= 2 contiguous parts.
    let mut min_product = f64::INFINITY;
    for split_mask in 1u32..(1 << (len - 1)) {
        let mut product = 1.0;
        let mut part_start = 0usize;
        for boundary in 0..len {
            let split_here = boundary + 1 == len || split_mask >> boundary & 1 == 1;
            if split_here {
                let part = &ngram[part_start..=boundary];
                product *= counts.probability(part).ok_or_else(undefined)?;
                part_start = boundary + 1;
            }
        }
        if product < min_product {
            min_product = product;
        }
    }
    Ok(joint / min_product)
}

/// Ranked PMI n-gram vocabulary for lengths 2..=5, plus the parameters and
/// corpus totals it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct PmiVocabulary {
    top_k: usize,
    min_count: u64,
    totals: Vec<u64>,
    // ranked[i] covers n-grams of length i + MIN_NGRAM_LEN, sorted by
    // (score desc, words asc) and truncated to top_k
    ranked: Vec<Vec<(Vec<String>, f64)>>,
    member: Vec<HashSet<Vec<String>>>,
}

impl PmiVocabulary {
    /// A vocabulary with no n-grams; segmentation against it yields only
    /// singleton groups.
    pub fn empty() -> PmiVocabulary {
        PmiVocabulary {
            top_k: DEFAULT_TOP_K,
            min_count: DEFAULT_MIN_COUNT,
            totals: Vec::new(),
            ranked: vec![Vec::new(); MAX_NGRAM_LEN - MIN_NGRAM_LEN + 1],
            member: vec![HashSet::new(); MAX_NGRAM_LEN - MIN_NGRAM_LEN + 1],
        }
    }

    pub fn top_k(&self) -> usize {
        self.top_k
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Ranked `(ngram, score)` list for length `n`, best first.
    pub fn ranked(&self, n: usize) -> &[(Vec<String>, f64)] {
        static EMPTY: Vec<(Vec<String>, f64)> = Vec::new();
        self.ranked
            .get(n.wrapping_sub(MIN_NGRAM_LEN))
            .unwrap_or(&EMPTY)
    }

    pub fn contains(&self, words: &[String]) -> bool {
        self.member
            .get(words.len().wrapping_sub(MIN_NGRAM_LEN))
            .map(|set| set.contains(words))
            .unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.ranked.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.iter().all(Vec::is_empty)
    }

    fn from_parts(
        top_k: usize,
        min_count: u64,
        totals: Vec<u64>,
        ranked: Vec<Vec<(Vec<String>, f64)>>,
    ) -> PmiVocabulary {
        let member = ranked
            .iter()
            .map(|list| list.iter().map(|(w, _)| w.clone()).collect())
            .collect();
        PmiVocabulary {
            top_k,
            min_count,
            totals,
            ranked,
            member,
        }
    }

    /// Persist as the versioned flat file format; see [`write_vocab`].
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PmiError> {
        let mut out = BufWriter::new(File::create(path)?);
        write_vocab(self, &mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PmiVocabulary, PmiError> {
        read_vocab(BufReader::new(File::open(path)?))
    }
}

/// Score all n-grams with count >= `min_count`, rank per length by
/// (score descending, words ascending), and keep the best `top_k` per length.
///
/// The output depends only on the counts, so it is invariant to shard order
/// and worker count.
pub fn build_vocab(counts: &NgramCounts, top_k: usize, min_count: u64) -> PmiVocabulary {
    assert!(top_k >= 1, "top_k must be at least 1");
    let mut ranked = Vec::with_capacity(MAX_NGRAM_LEN - MIN_NGRAM_LEN + 1);
    for n in MIN_NGRAM_LEN..=MAX_NGRAM_LEN {
        let mut scored: Vec<(Vec<String>, f64)> = Vec::new();
        if n <= counts.n_max {
            for (ngram, &count) in &counts.counts[n - 1] {
                if count < min_count {
                    continue;
                }
                if let Ok(score) = pmi_score(ngram, counts) {
                    scored.push((ngram.clone(), score));
                }
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(top_k);
        ranked.push(scored);
    }
    PmiVocabulary::from_parts(top_k, min_count, counts.totals.clone(), ranked)
}

/// A partition of a sequence's word indices into vocabulary n-gram groups and
/// singleton words, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub groups: Vec<Range<usize>>,
}

impl Segmentation {
    pub fn word_count(&self) -> usize {
        self.groups.last().map(|g| g.end).unwrap_or(0)
    }
}

/// Greedy left-to-right longest-match segmentation of a word sequence.
///
/// At each position the longest vocabulary n-gram starting there wins
/// (n from 5 down to 2); otherwise the word stands alone.
pub fn segment_words(words: &[String], vocab: &PmiVocabulary) -> Segmentation {
    let mut groups = Vec::with_capacity(words.len());
    let mut at = 0usize;
    while at < words.len() {
        let longest = (MIN_NGRAM_LEN..=MAX_NGRAM_LEN)
            .rev()
            .find(|n| at + n <= words.len() && vocab.contains(&words[at..at + n]));
        let step = longest.unwrap_or(1);
        groups.push(at..at + step);
        at += step;
    }
    Segmentation { groups }
}

/// [`segment_words`] over a sequence's word surface forms.
pub fn segment_by_ngrams(
    seq: &TokenSequence,
    vocab: &PmiVocabulary,
) -> Result<Segmentation, CoreError> {
    Ok(segment_words(&seq.word_surfaces()?, vocab))
}

/// Write the versioned, sorted flat file:
///
/// ```text
/// maskmill-pmi-vocab v1
/// top_k <count>
/// min_count <count>
/// totals <positions for n=1> <n=2> ...
/// <n> TAB <ngram words joined by one space> TAB <score, 17 significant digits>
/// ...
/// ```
///
/// Entry order is length ascending, then rank. Round-trips bit-exactly;
/// words containing whitespace are rejected because they cannot be split
/// back apart.
pub fn write_vocab(vocab: &PmiVocabulary, out: &mut impl Write) -> Result<(), PmiError> {
    writeln!(out, "{VOCAB_FILE_MAGIC}")?;
    writeln!(out, "top_k {}", vocab.top_k)?;
    writeln!(out, "min_count {}", vocab.min_count)?;
    let totals: Vec<String> = vocab.totals.iter().map(u64::to_string).collect();
    writeln!(out, "totals {}", totals.join(" "))?;
    for (i, list) in vocab.ranked.iter().enumerate() {
        let n = i + MIN_NGRAM_LEN;
        for (words, score) in list {
            for word in words {
                if word.contains(char::is_whitespace) {
                    return Err(PmiError::UnencodableWord { word: word.clone() });
                }
            }
            writeln!(out, "{n}\t{}\t{score:.16e}", words.join(" "))?;
        }
    }
    Ok(())
}

/// Read the flat file produced by [`write_vocab`], validating the header and
/// the per-length (score desc, words asc) ordering.
pub fn read_vocab(input: impl Read) -> Result<PmiVocabulary, PmiError> {
    fn header_line(
        lines: &mut impl Iterator<Item = io::Result<String>>,
        line_no: u64,
        key: &str,
    ) -> Result<String, PmiError> {
        let missing = || PmiError::VocabFormat {
            line: line_no,
            reason: format!("expected {key:?} header line"),
        };
        let line = lines.next().ok_or_else(missing)??;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| PmiError::VocabFormat {
                line: line_no,
                reason: format!("expected {key:?} header line, found {line:?}"),
            })
    }
    fn header_u64(
        lines: &mut impl Iterator<Item = io::Result<String>>,
        line_no: u64,
        key: &str,
    ) -> Result<u64, PmiError> {
        let value = header_line(lines, line_no, key)?;
        value.parse().map_err(|_| PmiError::VocabFormat {
            line: line_no,
            reason: format!("malformed {key} value {value:?}"),
        })
    }

    let mut lines = BufReader::new(input).lines();
    let magic = lines.next().ok_or(PmiError::VocabFormat {
        line: 1,
        reason: "empty file".into(),
    })??;
    if magic != VOCAB_FILE_MAGIC {
        return Err(PmiError::VocabFormat {
            line: 1,
            reason: format!("expected header {VOCAB_FILE_MAGIC:?}, found {magic:?}"),
        });
    }
    let top_k = header_u64(&mut lines, 2, "top_k")? as usize;
    let min_count = header_u64(&mut lines, 3, "min_count")?;
    let totals_value = header_line(&mut lines, 4, "totals")?;
    let totals: Vec<u64> = totals_value
        .split(' ')
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| PmiError::VocabFormat {
            line: 4,
            reason: format!("malformed totals value {totals_value:?}"),
        })?;

    let mut ranked: Vec<Vec<(Vec<String>, f64)>> =
        vec![Vec::new(); MAX_NGRAM_LEN - MIN_NGRAM_LEN + 1];
    for (line_no, line) in (5u64..).zip(lines) {
        let line = line?;
        let bad = |reason: String| PmiError::VocabFormat {
            line: line_no,
            reason,
        };
        let mut fields = line.splitn(3, '\t');
        let n: usize = fields
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing n-gram length field".into()))?;
        if !(MIN_NGRAM_LEN..=MAX_NGRAM_LEN).contains(&n) {
            return Err(bad(format!("n-gram length {n} outside 2..=5")));
        }
        let words: Vec<String> = fields
            .next()
            .ok_or_else(|| bad("missing n-gram field".into()))?
            .split(' ')
            .map(str::to_string)
            .collect();
        if words.len() != n {
            return Err(bad(format!(
                "n-gram has {} words but is declared length {n}",
                words.len()
            )));
        }
        let score: f64 = fields
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing or malformed score field".into()))?;
        let list = &mut ranked[n - MIN_NGRAM_LEN];
        if let Some((prev_words, prev_score)) = list.last() {
            let ordered = *prev_score > score || (*prev_score == score && prev_words < &words);
            if !ordered {
                return Err(bad(
                    "entries are not sorted by (score desc, ngram asc)".into()
                ));
            }
        }
        if list.len() == top_k {
            return Err(bad(format!("more than top_k={top_k} entries for n={n}")));
        }
        list.push((words, score));
    }
    Ok(PmiVocabulary::from_parts(top_k, min_count, totals, ranked))
}
