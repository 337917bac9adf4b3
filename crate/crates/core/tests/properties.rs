//! Property tests for the crate's structural invariants.

use proptest::prelude::*;

use maskmill_core::analysis::{competitiveness, delta_report, Indicator, ResultRow, ResultTable};
use maskmill_core::corruption::{corrupt, CorruptionPolicy};
use maskmill_core::pmi::{
    build_vocab, count_ngrams, read_vocab, segment_words, write_vocab, NgramCounts,
};
use maskmill_core::rng::{RandomStream, StreamPurpose};
use maskmill_core::strategies::{
    apply_strategy, mask_noun_verb, mask_pmi, mask_span, mask_whole_word, SpanParams,
    StrategyContext,
};
use maskmill_core::types::{
    Mask, MaskingConfig, POSCategory, Strategy as MaskStrategy, Token, TokenSequence,
};

fn category(index: u8) -> POSCategory {
    POSCategory::ALL[index as usize % POSCategory::ALL.len()]
}

/// Sequences over a small word alphabet: per word a surface index and a
/// subword piece count.
fn arb_seq(max_words: usize, alphabet: u8) -> impl Strategy<Value = TokenSequence> {
    (
        "[a-z0-9]{1,8}",
        prop::collection::vec((0..alphabet, 1usize..=3, 0u8..6), 0..=max_words),
    )
        .prop_map(|(id, words)| {
            let mut tokens = Vec::new();
            for (word_index, (surface, pieces, pos)) in words.iter().enumerate() {
                for piece in 0..*pieces {
                    let text = if piece == 0 {
                        format!("w{surface}")
                    } else {
                        format!("##p{piece}")
                    };
                    tokens.push(Token::new(text, word_index as u32, category(*pos)));
                }
            }
            TokenSequence::new(id, tokens).expect("generated sequences are valid")
        })
}

fn words_of(seq: &TokenSequence) -> Vec<String> {
    seq.word_surfaces().unwrap()
}

proptest! {
    #[test]
    fn word_groups_partition_token_indices(seq in arb_seq(12, 6)) {
        let groups = seq.word_groups().unwrap();
        let flattened: Vec<usize> = groups.iter().flat_map(|g| g.clone()).collect();
        prop_assert_eq!(flattened, (0..seq.len()).collect::<Vec<_>>());
        for group in &groups {
            let word = seq.tokens[group.start].word_index;
            prop_assert!(seq.tokens[group.clone()].iter().all(|t| t.word_index == word));
        }
    }

    #[test]
    fn empirical_rate_is_popcount_over_n(bits in prop::collection::vec(any::<bool>(), 1..64)) {
        let mask = Mask::from_bits(bits.clone());
        let expected = bits.iter().filter(|&&b| b).count() as f64 / bits.len() as f64;
        prop_assert_eq!(mask.empirical_rate().unwrap(), expected);
        prop_assert!((0.0..=1.0).contains(&mask.empirical_rate().unwrap()));
    }

    #[test]
    fn whole_word_masks_are_atomic(seq in arb_seq(12, 6), p in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = RandomStream::from_seed(seed);
        let mask = mask_whole_word(&seq, p, &mut rng).unwrap();
        for group in seq.word_groups().unwrap() {
            let first = mask.get(group.start);
            prop_assert!(group.clone().all(|i| mask.get(i) == first));
        }
    }

    #[test]
    fn noun_verb_masks_exactly_the_budget(seq in arb_seq(12, 6), p in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = RandomStream::from_seed(seed);
        let mask = mask_noun_verb(&seq, p, &mut rng);
        let n = seq.len();
        let budget = ((n as f64 * p) + 0.5).floor() as usize;
        prop_assert_eq!(mask.count_masked(), budget.min(n));
    }

    #[test]
    fn noun_verb_masking_is_closed_under_priority(seq in arb_seq(12, 6), p in 0.0f64..=1.0, seed in any::<u64>()) {
        let mut rng = RandomStream::from_seed(seed);
        let mask = mask_noun_verb(&seq, p, &mut rng);
        // an unmasked token of category c forbids masked tokens in any
        // strictly lower-priority category
        for category in POSCategory::ALL {
            let has_unmasked = seq
                .tokens
                .iter()
                .zip(mask.bits())
                .any(|(t, &m)| t.pos == category && !m);
            if has_unmasked {
                let lower_masked = seq
                    .tokens
                    .iter()
                    .zip(mask.bits())
                    .any(|(t, &m)| t.pos > category && m);
                prop_assert!(!lower_masked);
            }
        }
    }

    #[test]
    fn span_rate_is_bounded(seq in arb_seq(12, 6), p in 0.0f64..=1.0, seed in any::<u64>()) {
        prop_assume!(!seq.is_empty());
        let params = SpanParams::default();
        let mut rng = RandomStream::from_seed(seed);
        let mask = mask_span(&seq, p, &mut rng, params);
        let rate = mask.empirical_rate().unwrap();
        prop_assert!(rate >= p);
        prop_assert!(rate <= p + params.max_len as f64 / seq.len() as f64);
    }

    #[test]
    fn pmi_masks_are_atomic_per_group(
        corpus in prop::collection::vec(arb_seq(10, 4), 1..6),
        seq in arb_seq(12, 4),
        p in 0.0f64..=1.0,
        seed in any::<u64>(),
    ) {
        let counts = count_ngrams(&corpus, 5).unwrap();
        let vocab = build_vocab(&counts, 1000, 2);
        let mut rng = RandomStream::from_seed(seed);
        let mask = mask_pmi(&seq, p, &mut rng, &vocab).unwrap();

        let token_groups = seq.word_groups().unwrap();
        let segmentation = segment_words(&words_of(&seq), &vocab);
        for group in &segmentation.groups {
            let first = mask.get(token_groups[group.start].start);
            for word in group.clone() {
                prop_assert!(token_groups[word].clone().all(|i| mask.get(i) == first));
            }
        }
    }

    #[test]
    fn segmentation_partitions_the_words(
        corpus in prop::collection::vec(arb_seq(10, 4), 1..6),
        seq in arb_seq(12, 4),
    ) {
        let counts = count_ngrams(&corpus, 5).unwrap();
        let vocab = build_vocab(&counts, 1000, 2);
        let words = words_of(&seq);
        let segmentation = segment_words(&words, &vocab);
        let flattened: Vec<usize> = segmentation.groups.iter().flat_map(|g| g.clone()).collect();
        prop_assert_eq!(flattened, (0..words.len()).collect::<Vec<_>>());
        for group in &segmentation.groups {
            if group.len() > 1 {
                prop_assert!(vocab.contains(&words[group.clone()]));
            }
        }
    }

    #[test]
    fn raising_min_count_never_adds_ngrams(
        corpus in prop::collection::vec(arb_seq(10, 3), 1..6),
        min_count in 1u64..4,
    ) {
        let counts = count_ngrams(&corpus, 5).unwrap();
        let loose = build_vocab(&counts, usize::MAX / 2, min_count);
        let strict = build_vocab(&counts, usize::MAX / 2, min_count + 1);
        for n in 2..=5 {
            for (ngram, _) in strict.ranked(n) {
                prop_assert!(loose.contains(ngram));
            }
            prop_assert!(strict.ranked(n).len() <= loose.ranked(n).len());
        }
    }

    #[test]
    fn sharded_counts_merge_to_single_pass(
        corpus in prop::collection::vec(arb_seq(10, 4), 0..8),
        split in 0usize..8,
    ) {
        let split = split.min(corpus.len());
        let mut sharded = NgramCounts::new(4);
        sharded.merge(count_ngrams(&corpus[..split], 4).unwrap());
        sharded.merge(count_ngrams(&corpus[split..], 4).unwrap());
        prop_assert_eq!(sharded, count_ngrams(&corpus, 4).unwrap());
    }

    #[test]
    fn vocab_file_round_trips(corpus in prop::collection::vec(arb_seq(10, 4), 1..6)) {
        let counts = count_ngrams(&corpus, 5).unwrap();
        let vocab = build_vocab(&counts, 1000, 1);
        let mut bytes = Vec::new();
        write_vocab(&vocab, &mut bytes).unwrap();
        let loaded = read_vocab(bytes.as_slice()).unwrap();
        prop_assert_eq!(&loaded, &vocab);
        let mut again = Vec::new();
        write_vocab(&loaded, &mut again).unwrap();
        prop_assert_eq!(again, bytes);
    }

    #[test]
    fn corruption_labels_equal_mask_and_recover_input(
        seq in arb_seq(12, 6),
        bits in prop::collection::vec(any::<bool>(), 0..40),
        seed in any::<u64>(),
    ) {
        prop_assume!(bits.len() >= seq.len());
        let mask = Mask::from_bits(bits[..seq.len()].to_vec());
        let policy = CorruptionPolicy::default()
            .with_replacement_vocab(vec!["z1".into(), "z2".into(), "z3".into()]);
        let mut rng = RandomStream::from_seed(seed);
        let out = corrupt(&seq, &mask, &policy, &mut rng).unwrap();

        prop_assert_eq!(out.corrupted_tokens.len(), seq.len());
        for i in 0..seq.len() {
            prop_assert_eq!(out.labels[i].is_some(), mask.get(i));
            let restored = out.labels[i].as_deref().unwrap_or(&out.corrupted_tokens[i]);
            prop_assert_eq!(restored, seq.tokens[i].text.as_str());
        }
    }

    #[test]
    fn masks_depend_only_on_seed_id_and_config(
        seq in arb_seq(12, 4),
        strategy_idx in 0usize..5,
        p in 0.0f64..=1.0,
        global_seed in any::<u64>(),
    ) {
        let corpus = [seq.clone()];
        let vocab = build_vocab(&count_ngrams(&corpus, 5).unwrap(), 1000, 1);
        let cfg = MaskingConfig::new(MaskStrategy::ALL[strategy_idx], p, global_seed);
        let ctx = StrategyContext { pmi_vocab: Some(&vocab), span: None };
        if cfg.strategy == MaskStrategy::Span && seq.is_empty() {
            return Ok(());
        }
        let first = apply_strategy(&seq, &cfg, &ctx).unwrap();
        let second = apply_strategy(&seq, &cfg, &ctx).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn masking_and_corruption_streams_are_independent(id in "[a-z0-9]{1,12}", seed in any::<u64>()) {
        let mut masking = RandomStream::for_record(seed, &id, StreamPurpose::Masking);
        let mut corruption = RandomStream::for_record(seed, &id, StreamPurpose::Corruption);
        let a: Vec<u64> = (0..4).map(|_| masking.next_u64()).collect();
        let b: Vec<u64> = (0..4).map(|_| corruption.next_u64()).collect();
        prop_assert_ne!(a, b);
    }
}

// ---------------------------------------------------------------------------
// analysis invariants
// ---------------------------------------------------------------------------

fn arb_table() -> impl Strategy<Value = ResultTable> {
    const RATES: [f64; 5] = [0.15, 0.3, 0.45, 0.6, 0.75];
    let tasks = prop::sample::select(vec!["vqa", "nlvr", "flickr"]);
    let strategies = prop::sample::select(vec!["uniform", "span", "pmi", "whole-word"]);
    prop::collection::btree_set((tasks, strategies, 0usize..RATES.len(), 0i64..3), 1..60).prop_map(
        |keys| {
            let rows = keys
                .into_iter()
                .enumerate()
                .map(|(i, (task, strategy, rate_idx, seed))| ResultRow {
                    task: task.to_string(),
                    strategy: strategy.to_string(),
                    rate: RATES[rate_idx],
                    seed,
                    // deterministic pseudo-scores with repeats so ties occur
                    score: ((i * 37) % 11) as f64,
                })
                .collect();
            ResultTable::new(rows).expect("keys are unique by construction")
        },
    )
}

fn shifted(table: &ResultTable, offset: f64, scale: f64) -> ResultTable {
    let rows = table
        .rows()
        .iter()
        .map(|r| ResultRow {
            score: r.score * scale + offset,
            ..r.clone()
        })
        .collect();
    ResultTable::new(rows).unwrap()
}

/// Independent pair-enumeration oracle for the competitiveness probability.
fn oracle_p_hat(
    table: &ResultTable,
    reference: &str,
    task: &str,
    rate: f64,
    indicator: Indicator,
) -> Option<(f64, u64)> {
    let mut reference_scores = Vec::new();
    let mut other_scores = Vec::new();
    for row in table.rows() {
        if row.task != task || row.rate.to_bits() != rate.to_bits() {
            continue;
        }
        if row.strategy == reference {
            reference_scores.push(row.score);
        } else {
            other_scores.push(row.score);
        }
    }
    if reference_scores.is_empty() || other_scores.is_empty() {
        return None;
    }
    let mut hits = 0u64;
    let mut pairs = 0u64;
    for &u in &reference_scores {
        for &x in &other_scores {
            pairs += 1;
            let hit = match indicator {
                Indicator::ReferenceWins => u > x,
                Indicator::OtherWins => x > u,
            };
            if hit {
                hits += 1;
            }
        }
    }
    Some((hits as f64 / pairs as f64, pairs))
}

proptest! {
    #[test]
    fn competitiveness_matches_pair_enumeration_oracle(table in arb_table()) {
        let result = competitiveness(&table, "uniform", Indicator::ReferenceWins);
        let Ok(report) = result else {
            // tables without uniform (or without others) at some cell are
            // rejected by contract; nothing to cross-check
            return Ok(());
        };
        for entry in &report.entries {
            let (expected, pairs) = oracle_p_hat(
                &table,
                "uniform",
                &entry.task,
                entry.rate,
                Indicator::ReferenceWins,
            )
            .expect("report cells exist in the table");
            prop_assert_eq!(entry.p_hat, expected);
            prop_assert_eq!(entry.pairs, pairs);
            prop_assert!((0.0..=1.0).contains(&entry.p_hat));
        }
    }

    #[test]
    fn affine_shift_preserves_p_hat_and_delta(table in arb_table(), offset in -50.0f64..50.0) {
        let moved = shifted(&table, offset, 1.0);

        if let (Ok(before), Ok(after)) = (
            competitiveness(&table, "uniform", Indicator::ReferenceWins),
            competitiveness(&moved, "uniform", Indicator::ReferenceWins),
        ) {
            for (b, a) in before.entries.iter().zip(&after.entries) {
                prop_assert_eq!(b.p_hat, a.p_hat);
            }
        }

        if let (Ok(before), Ok(after)) = (
            delta_report(&table, 0.15, 0.6, false),
            delta_report(&moved, 0.15, 0.6, false),
        ) {
            for (b, a) in before.entries.iter().zip(&after.entries) {
                prop_assert!((b.delta - a.delta).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn positive_scaling_scales_delta_and_preserves_p_hat(table in arb_table(), scale in 0.1f64..10.0) {
        let scaled = shifted(&table, 0.0, scale);

        if let (Ok(before), Ok(after)) = (
            competitiveness(&table, "uniform", Indicator::ReferenceWins),
            competitiveness(&scaled, "uniform", Indicator::ReferenceWins),
        ) {
            for (b, a) in before.entries.iter().zip(&after.entries) {
                prop_assert_eq!(b.p_hat, a.p_hat);
            }
        }

        if let (Ok(before), Ok(after)) = (
            delta_report(&table, 0.15, 0.6, false),
            delta_report(&scaled, 0.15, 0.6, false),
        ) {
            for (b, a) in before.entries.iter().zip(&after.entries) {
                prop_assert!((a.delta - b.delta * scale).abs() < 1e-9 * (1.0 + b.delta.abs()));
                match (b.sem, a.sem) {
                    (Some(bs), Some(as_)) => {
                        prop_assert!((as_ - bs * scale).abs() < 1e-9 * (1.0 + bs));
                    }
                    (None, None) => {}
                    other => prop_assert!(false, "sem definedness changed: {:?}", other),
                }
            }
        }
    }
}
