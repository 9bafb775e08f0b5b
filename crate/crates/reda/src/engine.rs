//! The five random edit operations plus the augmentation loop with its
//! deduplication guarantee.
//!
//! Edit counts come from an editing rate times the token count, rounded
//! half-to-even over exact rationals (rates quantized to ten-thousandths), so
//! a product of exactly 0.5 yields zero edits and no operation applies.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::lexicon::SynonymLexicon;
use crate::text::{TokenSeq, Tokenizer};

/// Editing rates, mix policy, augmentation multiplicity and retry budget.
#[derive(Debug, Clone)]
pub struct RedaConfig {
    pub rate_sr: f64,
    pub rate_rs: f64,
    pub rate_ri: f64,
    pub rate_rd: f64,
    /// Random Mix draws this many to `rm_max_ops` distinct operations.
    pub rm_min_ops: usize,
    pub rm_max_ops: usize,
    /// Edits performed by each operation selected by Random Mix.
    pub rm_edits_per_op: usize,
    /// Unique augmentations requested per text below the corpus threshold.
    pub n_aug_small: usize,
    /// Unique augmentations requested per text at or above the threshold.
    pub n_aug_large: usize,
    pub small_corpus_threshold: usize,
    /// Attempt budget per augment call, as a multiple of `n_aug`.
    pub retry_factor: usize,
    pub seed: u64,
}

impl Default for RedaConfig {
    fn default() -> Self {
        RedaConfig {
            rate_sr: 0.2,
            rate_rs: 0.2,
            rate_ri: 0.1,
            rate_rd: 0.1,
            rm_min_ops: 2,
            rm_max_ops: 4,
            rm_edits_per_op: 1,
            n_aug_small: 2,
            n_aug_large: 1,
            small_corpus_threshold: 50_000,
            retry_factor: 10,
            seed: 42,
        }
    }
}

impl RedaConfig {
    /// The controlled-experiment variant of Random Mix: exactly two
    /// operations with one edit each.
    pub fn experiment_preset() -> Self {
        RedaConfig {
            rm_min_ops: 2,
            rm_max_ops: 2,
            rm_edits_per_op: 1,
            ..RedaConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        use crate::error::Error::InvalidConfig;
        for (name, rate) in [
            ("rate_sr", self.rate_sr),
            ("rate_rs", self.rate_rs),
            ("rate_ri", self.rate_ri),
            ("rate_rd", self.rate_rd),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(InvalidConfig(format!("{name} must be in [0,1], got {rate}")));
            }
        }
        if self.rm_min_ops < 2 || self.rm_max_ops > 4 || self.rm_min_ops > self.rm_max_ops {
            return Err(InvalidConfig(format!(
                "mix op count range [{}, {}] must satisfy 2 <= min <= max <= 4",
                self.rm_min_ops, self.rm_max_ops
            )));
        }
        if self.rm_edits_per_op < 1 {
            return Err(InvalidConfig("rm_edits_per_op must be >= 1".into()));
        }
        if self.n_aug_small < 1 || self.n_aug_large < 1 {
            return Err(InvalidConfig("n_aug must be >= 1".into()));
        }
        if self.retry_factor < 1 {
            return Err(InvalidConfig("retry_factor must be >= 1".into()));
        }
        Ok(())
    }

    /// Augmentation multiplicity for a corpus of `corpus_len` examples.
    pub fn n_aug_for(&self, corpus_len: usize) -> usize {
        if corpus_len < self.small_corpus_threshold {
            self.n_aug_small
        } else {
            self.n_aug_large
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EditOp {
    Sr,
    Ri,
    Rs,
    Rd,
    Rm,
}

/// Canonical operation order used by reports and the combined pipeline.
pub const ALL_OPS: [EditOp; 5] = [EditOp::Sr, EditOp::Ri, EditOp::Rs, EditOp::Rd, EditOp::Rm];

impl EditOp {
    pub fn name(self) -> &'static str {
        match self {
            EditOp::Sr => "sr",
            EditOp::Ri => "ri",
            EditOp::Rs => "rs",
            EditOp::Rd => "rd",
            EditOp::Rm => "rm",
        }
    }
}

impl std::fmt::Display for EditOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EditOp {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sr" => Ok(EditOp::Sr),
            "ri" => Ok(EditOp::Ri),
            "rs" => Ok(EditOp::Rs),
            "rd" => Ok(EditOp::Rd),
            "rm" => Ok(EditOp::Rm),
            other => Err(format!("unknown edit operation {other:?}")),
        }
    }
}

/// Number of edits for an editing rate and a token count: round-half-to-even
/// of the exact rational product, with the rate expressed in ten-thousandths.
/// No floating point is involved in the rounding itself, so e.g. a rate of
/// 0.1 on 25 tokens gives exactly 5/2 and rounds to 2.
pub fn num_edits(rate: f64, len: usize) -> usize {
    debug_assert!((0.0..=1.0).contains(&rate));
    let tenk = (rate * 10_000.0).round() as u64;
    let numerator = tenk * len as u64;
    let quotient = numerator / 10_000;
    let remainder = numerator % 10_000;
    let rounded = match remainder.cmp(&5_000) {
        std::cmp::Ordering::Less => quotient,
        std::cmp::Ordering::Greater => quotient + 1,
        std::cmp::Ordering::Equal => {
            if quotient % 2 == 0 {
                quotient
            } else {
                quotient + 1
            }
        }
    };
    rounded as usize
}

/// Replace `n` single occurrences with random synonyms, one position at a
/// time. Eligible positions are recomputed after every step, so a freshly
/// substituted word can be replaced again. Length is preserved.
pub fn synonym_replacement(
    seq: &TokenSeq,
    n: usize,
    lex: &SynonymLexicon,
    rng: &mut impl Rng,
) -> TokenSeq {
    let mut out = seq.clone();
    for _ in 0..n {
        let eligible = lex.eligible_positions(&out);
        if eligible.is_empty() {
            break;
        }
        let pos = eligible[rng.gen_range(0..eligible.len())];
        let synonyms = lex.synonyms_of(out.token(pos));
        let replacement = synonyms[rng.gen_range(0..synonyms.len())].clone();
        out.set_token(pos, replacement);
    }
    out
}

/// Insert `n` random synonyms of random in-text words at random gaps.
/// A step is a no-op only when no word in the current sequence has synonyms.
pub fn random_insertion(
    seq: &TokenSeq,
    n: usize,
    lex: &SynonymLexicon,
    rng: &mut impl Rng,
) -> TokenSeq {
    let mut out = seq.clone();
    for _ in 0..n {
        let eligible = lex.eligible_positions(&out);
        if eligible.is_empty() {
            break;
        }
        let pos = eligible[rng.gen_range(0..eligible.len())];
        let synonyms = lex.synonyms_of(out.token(pos));
        let synonym = synonyms[rng.gen_range(0..synonyms.len())].clone();
        let gap = rng.gen_range(0..=out.len());
        out.insert(gap, synonym, true);
    }
    out
}

/// Exchange the tokens at two distinct random positions, `n` times.
pub fn random_swap(seq: &TokenSeq, n: usize, rng: &mut impl Rng) -> TokenSeq {
    let mut out = seq.clone();
    if out.len() < 2 {
        return out;
    }
    for _ in 0..n {
        let i = rng.gen_range(0..out.len());
        let mut j = rng.gen_range(0..out.len() - 1);
        if j >= i {
            j += 1;
        }
        out.swap(i, j);
    }
    out
}

/// Delete `min(n, len - 1)` tokens at distinct random positions; at least one
/// token always survives and survivors keep their relative order.
pub fn random_deletion(seq: &TokenSeq, n: usize, rng: &mut impl Rng) -> TokenSeq {
    let k = n.min(seq.len().saturating_sub(1));
    let mut out = seq.clone();
    if k == 0 {
        return out;
    }
    let mut indices: Vec<usize> = (0..seq.len()).collect();
    let (chosen, _) = indices.partial_shuffle(rng, k);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable_by(|a, b| b.cmp(a));
    for i in chosen {
        out.remove(i);
    }
    out
}

/// Apply a random selection of the four base operations in random order,
/// each with `rm_edits_per_op` edits, threading the sequence through.
pub fn random_mix(
    seq: &TokenSeq,
    cfg: &RedaConfig,
    lex: &SynonymLexicon,
    rng: &mut impl Rng,
) -> TokenSeq {
    let mut ops = [EditOp::Sr, EditOp::Ri, EditOp::Rs, EditOp::Rd];
    ops.shuffle(rng);
    let lo = cfg.rm_min_ops.min(4);
    let hi = cfg.rm_max_ops.clamp(lo, 4);
    let k = rng.gen_range(lo..=hi);
    let mut out = seq.clone();
    for op in &ops[..k] {
        out = match op {
            EditOp::Sr => synonym_replacement(&out, cfg.rm_edits_per_op, lex, rng),
            EditOp::Ri => random_insertion(&out, cfg.rm_edits_per_op, lex, rng),
            EditOp::Rs => random_swap(&out, cfg.rm_edits_per_op, rng),
            EditOp::Rd => random_deletion(&out, cfg.rm_edits_per_op, rng),
            EditOp::Rm => unreachable!("mix never selects itself"),
        };
    }
    out
}

fn apply_op(
    base: &TokenSeq,
    op: EditOp,
    cfg: &RedaConfig,
    lex: &SynonymLexicon,
    rng: &mut impl Rng,
) -> TokenSeq {
    match op {
        EditOp::Sr => synonym_replacement(base, num_edits(cfg.rate_sr, base.len()), lex, rng),
        EditOp::Ri => random_insertion(base, num_edits(cfg.rate_ri, base.len()), lex, rng),
        EditOp::Rs => random_swap(base, num_edits(cfg.rate_rs, base.len()), rng),
        EditOp::Rd => random_deletion(base, num_edits(cfg.rate_rd, base.len()), rng),
        EditOp::Rm => random_mix(base, cfg, lex, rng),
    }
}

/// Attempt accounting for one augment call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AttemptStats {
    pub attempted: u64,
    pub produced: u64,
    pub dedup_rejected: u64,
    pub shortfall: u64,
}

impl AttemptStats {
    pub fn merge(&mut self, other: &AttemptStats) {
        self.attempted += other.attempted;
        self.produced += other.produced;
        self.dedup_rejected += other.dedup_rejected;
        self.shortfall += other.shortfall;
    }
}

/// Produce up to `n_aug` unique augmented texts for one input. Every attempt
/// edits a fresh copy of the original tokenization; results equal to the
/// original (after detokenization) or to an already-collected result are
/// rejected. Gives up after `retry_factor * n_aug` attempts, so the output
/// may fall short of `n_aug`. The original is never in the output.
pub fn augment(
    tokenizer: &Tokenizer,
    text: &str,
    op: EditOp,
    n_aug: usize,
    cfg: &RedaConfig,
    lex: &SynonymLexicon,
    rng: &mut impl Rng,
) -> Result<Vec<String>> {
    augment_with_stats(tokenizer, text, op, n_aug, cfg, lex, rng).map(|(texts, _)| texts)
}

/// Same as [`augment`] but also reports attempt accounting.
pub fn augment_with_stats(
    tokenizer: &Tokenizer,
    text: &str,
    op: EditOp,
    n_aug: usize,
    cfg: &RedaConfig,
    lex: &SynonymLexicon,
    rng: &mut impl Rng,
) -> Result<(Vec<String>, AttemptStats)> {
    let base = tokenizer.tokenize(text)?;
    let canonical = base.detokenize();
    let mut results: Vec<String> = Vec::new();
    let mut stats = AttemptStats::default();
    let budget = cfg.retry_factor.saturating_mul(n_aug);
    for _ in 0..budget {
        if results.len() >= n_aug {
            break;
        }
        stats.attempted += 1;
        let candidate = apply_op(&base, op, cfg, lex, rng).detokenize();
        if candidate == canonical || candidate == text || results.contains(&candidate) {
            stats.dedup_rejected += 1;
        } else {
            results.push(candidate);
        }
    }
    stats.produced = results.len() as u64;
    stats.shortfall = (n_aug - results.len()) as u64;
    Ok((results, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::LanguageMode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn en() -> Tokenizer {
        Tokenizer::new(LanguageMode::English)
    }

    fn seq(text: &str) -> TokenSeq {
        en().tokenize(text).unwrap()
    }

    fn lex(entries: &[(&str, &[&str])]) -> SynonymLexicon {
        SynonymLexicon::from_entries(
            LanguageMode::English,
            entries
                .iter()
                .map(|(h, s)| (h.to_string(), s.iter().map(|x| x.to_string()).collect())),
        )
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn num_edits_spec_values() {
        assert_eq!(num_edits(0.1, 5), 0); // 0.5 rounds down to zero edits
        assert_eq!(num_edits(0.2, 10), 2);
        assert_eq!(num_edits(0.1, 25), 2); // 5/2 rounds half-to-even
        assert_eq!(num_edits(0.2, 3), 1);
        assert_eq!(num_edits(0.2, 2), 0);
        assert_eq!(num_edits(0.3, 5), 2); // 3/2 rounds up to the even side
        assert_eq!(num_edits(0.0, 100), 0);
        assert_eq!(num_edits(1.0, 7), 7);
        assert_eq!(num_edits(0.1, 0), 0);
    }

    #[test]
    fn sr_single_possible_outcome() {
        let l = lex(&[("good", &["fine"])]);
        let out = synonym_replacement(&seq("a good movie"), 1, &l, &mut rng(7));
        assert_eq!(out.tokens(), ["a", "fine", "movie"]);
    }

    #[test]
    fn sr_zero_edits_is_identity() {
        let l = lex(&[("good", &["fine"])]);
        let s = seq("a good movie");
        assert_eq!(synonym_replacement(&s, 0, &l, &mut rng(7)), s);
    }

    #[test]
    fn sr_empty_lexicon_is_identity() {
        let l = lex(&[]);
        let s = seq("a good movie");
        assert_eq!(synonym_replacement(&s, 3, &l, &mut rng(7)), s);
    }

    #[test]
    fn sr_preserves_length() {
        let l = lex(&[("good", &["fine", "great"]), ("movie", &["film"])]);
        let s = seq("a good movie, very good");
        for seed in 0..50 {
            assert_eq!(synonym_replacement(&s, 3, &l, &mut rng(seed)).len(), s.len());
        }
    }

    #[test]
    fn ri_outcome_set_is_the_four_gaps() {
        let l = lex(&[("good", &["fine"])]);
        let s = seq("a good movie");
        let outcomes: BTreeSet<String> = (0..400)
            .map(|seed| random_insertion(&s, 1, &l, &mut rng(seed)).detokenize())
            .collect();
        let expected: BTreeSet<String> = [
            "fine a good movie",
            "a fine good movie",
            "a good fine movie",
            "a good movie fine",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(outcomes, expected);
    }

    #[test]
    fn ri_empty_lexicon_is_identity() {
        let l = lex(&[]);
        let s = seq("a good movie");
        assert_eq!(random_insertion(&s, 2, &l, &mut rng(3)), s);
    }

    #[test]
    fn rs_two_tokens_always_swap() {
        let s = seq("A B");
        for seed in 0..20 {
            let out = random_swap(&s, 1, &mut rng(seed));
            assert_eq!(out.tokens(), ["B", "A"]);
        }
    }

    #[test]
    fn rs_single_token_is_identity() {
        let s = seq("A");
        assert_eq!(random_swap(&s, 1, &mut rng(1)), s);
    }

    #[test]
    fn rs_preserves_token_multiset() {
        let s = seq("the cat sat on the mat");
        for seed in 0..50 {
            let out = random_swap(&s, 4, &mut rng(seed));
            let mut a = s.tokens().to_vec();
            let mut b = out.tokens().to_vec();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rd_two_tokens_leaves_one() {
        let s = seq("A B");
        let outcomes: BTreeSet<String> = (0..100)
            .map(|seed| random_deletion(&s, 1, &mut rng(seed)).detokenize())
            .collect();
        let expected: BTreeSet<String> = ["A", "B"].into_iter().map(String::from).collect();
        assert_eq!(outcomes, expected);
    }

    #[test]
    fn rd_never_deletes_everything() {
        let s = seq("A");
        assert_eq!(random_deletion(&s, 5, &mut rng(1)), s);
        let s2 = seq("A B C");
        for seed in 0..20 {
            assert_eq!(random_deletion(&s2, 99, &mut rng(seed)).len(), 1);
        }
    }

    #[test]
    fn rm_preset_respects_length_bound() {
        let cfg = RedaConfig::experiment_preset();
        let l = lex(&[("good", &["fine"])]);
        for text in ["A", "a good movie", "one two three four five six"] {
            let s = seq(text);
            for seed in 0..100 {
                let out = random_mix(&s, &cfg, &l, &mut rng(seed));
                let lo = s.len().saturating_sub(2 * cfg.rm_edits_per_op).max(1);
                let hi = s.len() + 2 * cfg.rm_edits_per_op;
                assert!(
                    (lo..=hi).contains(&out.len()),
                    "len {} outside [{lo}, {hi}] for {text:?}",
                    out.len()
                );
            }
        }
    }

    #[test]
    fn rm_degenerate_single_token_empty_lexicon() {
        let cfg = RedaConfig::default();
        let l = lex(&[]);
        let s = seq("A");
        for seed in 0..20 {
            assert_eq!(random_mix(&s, &cfg, &l, &mut rng(seed)), s);
        }
    }

    #[test]
    fn augment_sr_collects_the_single_unique_result() {
        let l = lex(&[("good", &["fine"])]);
        let cfg = RedaConfig::default();
        let out = augment(&en(), "a good movie", EditOp::Sr, 2, &cfg, &l, &mut rng(5)).unwrap();
        assert_eq!(out, ["a fine movie"]);
    }

    #[test]
    fn augment_sr_empty_lexicon_produces_nothing() {
        let l = lex(&[]);
        let cfg = RedaConfig::default();
        let out = augment(&en(), "a good movie", EditOp::Sr, 2, &cfg, &l, &mut rng(5)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn augment_zero_edit_count_produces_nothing() {
        // Two tokens at swap rate 0.2 give 0.4, which rounds to zero edits,
        // so the swap never applies and dedup rejects every attempt.
        let l = lex(&[]);
        let cfg = RedaConfig::default();
        let out = augment(&en(), "A B", EditOp::Rs, 2, &cfg, &l, &mut rng(5)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn augment_rs_five_tokens_yields_swaps() {
        let l = lex(&[]);
        let cfg = RedaConfig::default();
        let (out, stats) =
            augment_with_stats(&en(), "A B C D E", EditOp::Rs, 2, &cfg, &l, &mut rng(5)).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(stats.produced, 2);
        assert_eq!(stats.shortfall, 0);
        assert_eq!(stats.attempted, stats.produced + stats.dedup_rejected);
        for t in &out {
            let mut tokens: Vec<&str> = t.split(' ').collect();
            tokens.sort_unstable();
            assert_eq!(tokens, ["A", "B", "C", "D", "E"]);
        }
    }

    #[test]
    fn augment_respects_retry_budget() {
        let l = lex(&[("good", &["fine"])]);
        let cfg = RedaConfig::default();
        let (_, stats) =
            augment_with_stats(&en(), "a good movie", EditOp::Sr, 3, &cfg, &l, &mut rng(5))
                .unwrap();
        assert!(stats.attempted <= (cfg.retry_factor * 3) as u64);
        assert_eq!(stats.produced, 1);
        assert_eq!(stats.shortfall, 2);
    }

    #[test]
    fn augment_propagates_empty_text() {
        let l = lex(&[]);
        let cfg = RedaConfig::default();
        assert!(augment(&en(), "   ", EditOp::Sr, 1, &cfg, &l, &mut rng(5)).is_err());
    }

    #[test]
    fn augment_is_deterministic_for_a_seed() {
        let l = lex(&[("good", &["fine", "great"]), ("movie", &["film", "flick"])]);
        let cfg = RedaConfig::default();
        for op in ALL_OPS {
            let a = augment(&en(), "a good movie tonight maybe", op, 2, &cfg, &l, &mut rng(9))
                .unwrap();
            let b = augment(&en(), "a good movie tonight maybe", op, 2, &cfg, &l, &mut rng(9))
                .unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn validate_rejects_bad_configs() {
        let mut cfg = RedaConfig::default();
        cfg.rate_sr = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = RedaConfig::default();
        cfg.rm_min_ops = 3;
        cfg.rm_max_ops = 2;
        assert!(cfg.validate().is_err());
        assert!(RedaConfig::default().validate().is_ok());
        assert!(RedaConfig::experiment_preset().validate().is_ok());
    }

    #[test]
    fn n_aug_threshold_boundary() {
        let cfg = RedaConfig::default();
        assert_eq!(cfg.n_aug_for(49_999), 2);
        assert_eq!(cfg.n_aug_for(50_000), 1);
    }
}
