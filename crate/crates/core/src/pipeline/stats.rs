//! Masking statistics aggregated over a pipeline run.
//!
//! The headline number is the mean empirical masking rate, which should sit
//! near the configured rate on real corpora. Per-strategy histograms describe
//! how the masks look: masked-run lengths for span masking, the deepest POS
//! category reached for noun-verb, and masked group sizes for whole-word and
//! PMI masking.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::types::{Mask, POSCategory, Strategy, TokenSequence};

/// Aggregate counters and histograms for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaskingStats {
    pub records: u64,
    pub tokens: u64,
    pub masked_tokens: u64,
    /// `masked_tokens / tokens`; 0 when no tokens were seen.
    pub mean_rate: f64,
    pub skipped_records: u64,
    pub unknown_pos_tags: u64,
    /// Lengths of maximal masked runs (span strategy).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span_run_lengths: Option<BTreeMap<usize, u64>>,
    /// Deepest POS category masked per record (noun-verb strategy);
    /// records with empty masks count under `"(none)"`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category_fill_depth: Option<BTreeMap<String, u64>>,
    /// Token count of each fully-masked group (whole-word and PMI strategies).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub masked_group_sizes: Option<BTreeMap<usize, u64>>,
}

impl MaskingStats {
    pub fn new(strategy: Option<Strategy>) -> MaskingStats {
        MaskingStats {
            records: 0,
            tokens: 0,
            masked_tokens: 0,
            mean_rate: 0.0,
            skipped_records: 0,
            unknown_pos_tags: 0,
            span_run_lengths: matches!(strategy, Some(Strategy::Span)).then(BTreeMap::new),
            category_fill_depth: matches!(strategy, Some(Strategy::NounVerb)).then(BTreeMap::new),
            masked_group_sizes: matches!(strategy, Some(Strategy::WholeWord | Strategy::Pmi))
                .then(BTreeMap::new),
        }
    }

    pub fn absorb(&mut self, delta: &StatsDelta) {
        self.records += 1;
        self.tokens += delta.tokens;
        self.masked_tokens += delta.masked;
        self.unknown_pos_tags += delta.unknown_pos;
        if let Some(hist) = &mut self.span_run_lengths {
            for &run in &delta.span_runs {
                *hist.entry(run).or_insert(0) += 1;
            }
        }
        if let Some(hist) = &mut self.category_fill_depth {
            if let Some(depth) = delta.fill_depth {
                let key = match depth {
                    Some(category) => category.as_str().to_string(),
                    None => "(none)".to_string(),
                };
                *hist.entry(key).or_insert(0) += 1;
            }
        }
        if let Some(hist) = &mut self.masked_group_sizes {
            for &size in &delta.group_sizes {
                *hist.entry(size).or_insert(0) += 1;
            }
        }
    }

    /// Recompute the derived mean; call once after the last `absorb`.
    pub fn finalize(&mut self) {
        self.mean_rate = if self.tokens == 0 {
            0.0
        } else {
            self.masked_tokens as f64 / self.tokens as f64
        };
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialization cannot fail")
    }
}

/// One record's contribution to the run statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsDelta {
    pub tokens: u64,
    pub masked: u64,
    pub unknown_pos: u64,
    pub span_runs: Vec<usize>,
    /// `Some(deepest masked category)` for noun-verb records; inner `None`
    /// when nothing was masked.
    pub fill_depth: Option<Option<POSCategory>>,
    pub group_sizes: Vec<usize>,
}

impl StatsDelta {
    pub fn for_record(
        seq: &TokenSequence,
        mask: &Mask,
        unknown_pos: u64,
        strategy: Strategy,
    ) -> StatsDelta {
        let mut delta = StatsDelta {
            tokens: seq.len() as u64,
            masked: mask.count_masked() as u64,
            unknown_pos,
            ..StatsDelta::default()
        };
        match strategy {
            Strategy::Span => delta.span_runs = masked_runs(mask),
            Strategy::NounVerb => {
                let deepest = seq
                    .tokens
                    .iter()
                    .zip(mask.bits())
                    .filter(|(_, &m)| m)
                    .map(|(t, _)| t.pos)
                    .max();
                delta.fill_depth = Some(deepest);
            }
            Strategy::WholeWord => {
                // atomicity makes the first bit speak for the group
                if let Ok(groups) = seq.word_groups() {
                    delta.group_sizes = groups
                        .into_iter()
                        .filter(|g| mask.get(g.start))
                        .map(|g| g.len())
                        .collect();
                }
            }
            Strategy::Pmi | Strategy::Uniform => {}
        }
        delta
    }

    /// Group sizes for PMI masking need the segmentation, which the caller
    /// already has; token counts per masked group are recorded here.
    pub fn set_pmi_group_sizes(
        &mut self,
        mask: &Mask,
        word_groups: &[std::ops::Range<usize>],
        segmentation: &crate::pmi::Segmentation,
    ) {
        self.group_sizes = segmentation
            .groups
            .iter()
            .filter(|words| mask.get(word_groups[words.start].start))
            .map(|words| words.clone().map(|w| word_groups[w].len()).sum::<usize>())
            .collect();
    }
}

/// Lengths of maximal masked runs.
fn masked_runs(mask: &Mask) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut current = 0usize;
    for &bit in mask.bits() {
        if bit {
            current += 1;
        } else if current > 0 {
            runs.push(current);
            current = 0;
        }
    }
    if current > 0 {
        runs.push(current);
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Token;

    #[test]
    fn masked_runs_splits_on_gaps() {
        let mask = Mask::from_bits(vec![
            true, true, false, true, false, false, true, true, true,
        ]);
        assert_eq!(masked_runs(&mask), vec![2, 1, 3]);
        assert!(masked_runs(&Mask::all_false(4)).is_empty());
    }

    #[test]
    fn mean_rate_is_exact_ratio() {
        let seq = TokenSequence::new(
            "s",
            (0..4)
                .map(|i| Token::new(format!("t{i}"), i, POSCategory::Other))
                .collect(),
        )
        .unwrap();
        let mask = Mask::from_bits(vec![true, false, true, false]);
        let mut stats = MaskingStats::new(Some(Strategy::Uniform));
        stats.absorb(&StatsDelta::for_record(&seq, &mask, 0, Strategy::Uniform));
        stats.finalize();
        assert_eq!(stats.records, 1);
        assert_eq!(stats.tokens, 4);
        assert_eq!(stats.masked_tokens, 2);
        assert_eq!(stats.mean_rate, 0.5);
    }

    #[test]
    fn fill_depth_tracks_deepest_masked_category() {
        let seq = TokenSequence::new(
            "s",
            vec![
                Token::new("a", 0, POSCategory::Noun),
                Token::new("b", 1, POSCategory::Verb),
                Token::new("c", 2, POSCategory::Other),
            ],
        )
        .unwrap();
        let mask = Mask::from_bits(vec![true, true, false]);
        let delta = StatsDelta::for_record(&seq, &mask, 0, Strategy::NounVerb);
        assert_eq!(delta.fill_depth, Some(Some(POSCategory::Verb)));

        let empty = StatsDelta::for_record(&seq, &Mask::all_false(3), 0, Strategy::NounVerb);
        assert_eq!(empty.fill_depth, Some(None));
    }

    #[test]
    fn group_sizes_count_masked_words() {
        let seq = TokenSequence::new(
            "s",
            vec![
                Token::new("aa", 0, POSCategory::Other),
                Token::new("##bb", 0, POSCategory::Other),
                Token::new("cc", 1, POSCategory::Other),
            ],
        )
        .unwrap();
        let mask = Mask::from_bits(vec![true, true, false]);
        let delta = StatsDelta::for_record(&seq, &mask, 0, Strategy::WholeWord);
        assert_eq!(delta.group_sizes, vec![2]);
    }
}
