//! Text-pair corpora: TSV I/O, cross-paired augmentation, label-balanced
//! splitting and size accounting.
//!
//! Cross pairing: every augmented variant of one side is paired with the
//! *original* other side, keeping the source label. Originals are always
//! retained in the augmented corpus.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::{augment_with_stats, AttemptStats, EditOp, RedaConfig};
use crate::error::{Error, Result};
use crate::lexicon::SynonymLexicon;
use crate::text::Tokenizer;

/// A labeled text pair; label 1 means matched intents, 0 mismatched.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairExample {
    pub text_a: String,
    pub text_b: String,
    pub label: u8,
}

impl PairExample {
    pub fn new(text_a: impl Into<String>, text_b: impl Into<String>, label: u8) -> Self {
        let pair = PairExample {
            text_a: text_a.into(),
            text_b: text_b.into(),
            label,
        };
        debug_assert!(!pair.text_a.is_empty() && !pair.text_b.is_empty());
        debug_assert!(pair.label <= 1);
        pair
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Dev,
    Test,
    Augmented,
}

impl std::fmt::Display for SplitName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
            SplitName::Augmented => "augmented",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub examples: Vec<PairExample>,
    pub split_name: SplitName,
}

impl Corpus {
    pub fn new(examples: Vec<PairExample>, split_name: SplitName) -> Self {
        Corpus {
            examples,
            split_name,
        }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Read a corpus from UTF-8 TSV: `text_a<TAB>text_b<TAB>label`, one
    /// example per line, no header.
    pub fn read_tsv<P: AsRef<Path>>(path: P, split_name: SplitName) -> Result<Corpus> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let content = std::fs::read_to_string(path)?;
        let mut examples = Vec::new();
        for (idx, raw) in content.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            let parse_err = |msg: String| Error::Parse {
                path: display.clone(),
                line: line_no,
                msg,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            if fields[0].is_empty() || fields[1].is_empty() {
                return Err(parse_err("empty text field".into()));
            }
            let label = match fields[2] {
                "0" => 0,
                "1" => 1,
                other => return Err(parse_err(format!("label must be 0 or 1, found {other:?}"))),
            };
            examples.push(PairExample::new(fields[0], fields[1], label));
        }
        Ok(Corpus::new(examples, split_name))
    }

    pub fn write_tsv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for ex in &self.examples {
            writeln!(out, "{}\t{}\t{}", ex.text_a, ex.text_b, ex.label)?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorpusStats {
    pub total: usize,
    pub matched: usize,
    pub mismatched: usize,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let matched = corpus.examples.iter().filter(|e| e.label == 1).count();
    CorpusStats {
        total: corpus.len(),
        matched,
        mismatched: corpus.len() - matched,
    }
}

/// Per-operation attempt accounting plus corpus-level totals for one
/// `augment_corpus` call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentationReport {
    /// Stats per operation, in the order the operations were applied.
    pub per_op: Vec<(EditOp, AttemptStats)>,
    pub input_pairs: usize,
    pub output_pairs: usize,
    pub n_aug: usize,
}

impl AugmentationReport {
    fn empty(ops: &[EditOp], n_aug: usize) -> Self {
        AugmentationReport {
            per_op: ops.iter().map(|&op| (op, AttemptStats::default())).collect(),
            input_pairs: 0,
            output_pairs: 0,
            n_aug,
        }
    }

    fn merge_op_stats(&mut self, stats: &[(EditOp, AttemptStats)]) {
        for ((_, mine), (_, theirs)) in self.per_op.iter_mut().zip(stats) {
            mine.merge(theirs);
        }
    }

    /// Flat key-value rendering, one `key value` pair per line.
    pub fn to_kv_block(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("input_pairs {}\n", self.input_pairs));
        out.push_str(&format!("output_pairs {}\n", self.output_pairs));
        out.push_str(&format!("n_aug {}\n", self.n_aug));
        for (op, s) in &self.per_op {
            out.push_str(&format!("{op}.attempted {}\n", s.attempted));
            out.push_str(&format!("{op}.produced {}\n", s.produced));
            out.push_str(&format!("{op}.dedup_rejected {}\n", s.dedup_rejected));
            out.push_str(&format!("{op}.shortfall {}\n", s.shortfall));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("op,attempted,produced,dedup_rejected,shortfall\n");
        for (op, s) in &self.per_op {
            out.push_str(&format!(
                "{op},{},{},{},{}\n",
                s.attempted, s.produced, s.dedup_rejected, s.shortfall
            ));
        }
        out
    }
}

/// Augment one pair with each operation on each side. Variants of `text_a`
/// pair with the original `text_b` and vice versa; the original pair itself
/// is not included in the result.
pub fn augment_pair(
    tokenizer: &Tokenizer,
    pair: &PairExample,
    ops: &[EditOp],
    n_aug: usize,
    cfg: &RedaConfig,
    lex: &SynonymLexicon,
    rng: &mut impl rand::Rng,
) -> Result<Vec<PairExample>> {
    augment_pair_with_stats(tokenizer, pair, ops, n_aug, cfg, lex, rng).map(|(pairs, _)| pairs)
}

pub fn augment_pair_with_stats(
    tokenizer: &Tokenizer,
    pair: &PairExample,
    ops: &[EditOp],
    n_aug: usize,
    cfg: &RedaConfig,
    lex: &SynonymLexicon,
    rng: &mut impl rand::Rng,
) -> Result<(Vec<PairExample>, Vec<(EditOp, AttemptStats)>)> {
    let mut out = Vec::new();
    let mut stats = Vec::with_capacity(ops.len());
    for &op in ops {
        let (variants_a, stats_a) =
            augment_with_stats(tokenizer, &pair.text_a, op, n_aug, cfg, lex, rng)?;
        let (variants_b, stats_b) =
            augment_with_stats(tokenizer, &pair.text_b, op, n_aug, cfg, lex, rng)?;
        for a in variants_a {
            out.push(PairExample::new(a, pair.text_b.clone(), pair.label));
        }
        for b in variants_b {
            out.push(PairExample::new(pair.text_a.clone(), b, pair.label));
        }
        let mut merged = stats_a;
        merged.merge(&stats_b);
        stats.push((op, merged));
    }
    Ok((out, stats))
}

/// Splitmix-style mix of a base seed and a stream index. Used to hand every
/// work unit its own generator so results do not depend on scheduling.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Augment a whole corpus. `n_aug` follows the corpus-size policy; example
/// `i` is processed with a generator derived from `(cfg.seed, i)`, so the
/// output is identical regardless of worker count. Each original example is
/// emitted followed by its augmented pairs.
pub fn augment_corpus(
    tokenizer: &Tokenizer,
    corpus: &Corpus,
    ops: &[EditOp],
    cfg: &RedaConfig,
    lex: &SynonymLexicon,
) -> Result<(Corpus, AugmentationReport)> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n_aug = cfg.n_aug_for(corpus.len());
    let per_example: Vec<(Vec<PairExample>, Vec<(EditOp, AttemptStats)>)> = corpus
        .examples
        .par_iter()
        .enumerate()
        .map(|(i, pair)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, i as u64));
            augment_pair_with_stats(tokenizer, pair, ops, n_aug, cfg, lex, &mut rng)
        })
        .collect::<Result<_>>()?;

    let mut report = AugmentationReport::empty(ops, n_aug);
    report.input_pairs = corpus.len();
    let mut examples = Vec::with_capacity(corpus.len());
    for (original, (augmented, stats)) in corpus.examples.iter().zip(per_example) {
        report.merge_op_stats(&stats);
        examples.push(original.clone());
        examples.extend(augmented);
    }
    report.output_pairs = examples.len();
    Ok((Corpus::new(examples, SplitName::Augmented), report))
}

/// Draw three disjoint label-balanced corpora of the requested sizes,
/// sampling uniformly without replacement under `seed`.
pub fn balanced_split(
    pairs: &[PairExample],
    train_n: usize,
    dev_n: usize,
    test_n: usize,
    seed: u64,
) -> Result<(Corpus, Corpus, Corpus)> {
    for (split, n) in [("train", train_n), ("dev", dev_n), ("test", test_n)] {
        if n % 2 != 0 {
            return Err(Error::OddSize { split, size: n });
        }
    }
    let mut pos: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].label == 1).collect();
    let mut neg: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].label == 0).collect();
    let need = (train_n + dev_n + test_n) / 2;
    for (label, pool) in [(1u8, &pos), (0u8, &neg)] {
        if pool.len() < need {
            return Err(Error::InsufficientExamples {
                label,
                needed: need,
                available: pool.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut offset = 0;
    let mut take = |n: usize, split_name: SplitName| {
        let half = n / 2;
        let mut examples = Vec::with_capacity(n);
        // Interleave labels so every prefix stays close to balanced.
        for k in 0..half {
            examples.push(pairs[pos[offset + k]].clone());
            examples.push(pairs[neg[offset + k]].clone());
        }
        offset += half;
        Corpus::new(examples, split_name)
    };
    let train = take(train_n, SplitName::Train);
    let dev = take(dev_n, SplitName::Dev);
    let test = take(test_n, SplitName::Test);
    Ok((train, dev, test))
}
