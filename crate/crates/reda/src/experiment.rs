//! Experiment orchestration: train-set size sweeps with all operations
//! combined, and per-operation ablations, reported as CSV and plain-text
//! tables.
//!
//! Baseline and augmented runs at a given size always train on the identical
//! subsample of originals; the augmented run adds the augmented pairs on top.
//! Every run derives its own seeds from the master seed, so reports are
//! reproducible bit-for-bit and independent of how runs are scheduled.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine::{EditOp, RedaConfig, ALL_OPS};
use crate::error::{Error, Result};
use crate::lexicon::SynonymLexicon;
use crate::matcher::{evaluate, train, Metrics, TrainConfig};
use crate::pairs::{derive_seed, augment_corpus, Corpus, PairExample, SplitName};
use crate::text::{LanguageMode, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpsMode {
    /// One augmented run per size with all five operations together.
    Combined,
    /// One augmented run per size per single operation.
    Ablation,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Ascending train-set sizes to sweep.
    pub sizes: Vec<usize>,
    pub ops_mode: OpsMode,
    pub reda_cfg: RedaConfig,
    pub train_cfg: TrainConfig,
    pub mode: LanguageMode,
    /// Every subsample, augmentation and training seed derives from this.
    pub master_seed: u64,
}

/// The fixed corpora an experiment runs against.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub train_pool: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Baseline,
    Augmented,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Baseline => "baseline",
            Variant::Augmented => "augmented",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub size: usize,
    pub op: String,
    pub variant: Variant,
    pub metrics: Metrics,
    pub train_examples: usize,
    pub augmented_examples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AverageRow {
    pub variant: Variant,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub ops_mode: OpsMode,
    pub rows: Vec<RunRow>,
    /// Arithmetic means over all rows of each variant.
    pub averages: Vec<AverageRow>,
    /// Requested augmentation multiplicity per size.
    pub n_aug_by_size: Vec<(usize, usize)>,
    /// Ablation only: augmented train-set size per (size, op).
    pub aug_set_sizes: Vec<(usize, Vec<(String, usize)>)>,
    pub master_seed: u64,
}

pub const REPORT_CSV_HEADER: &str =
    "size,op,variant,accuracy,precision,recall,train_examples,augmented_examples,seed";

impl SweepReport {
    fn finish(mut self) -> Self {
        self.rows.sort_by(|a, b| {
            (a.size, &a.op, variant_rank(a.variant)).cmp(&(b.size, &b.op, variant_rank(b.variant)))
        });
        self.averages = [Variant::Baseline, Variant::Augmented]
            .into_iter()
            .map(|variant| {
                let rows: Vec<&RunRow> =
                    self.rows.iter().filter(|r| r.variant == variant).collect();
                let mean = |f: fn(&RunRow) -> f64| {
                    if rows.is_empty() {
                        0.0
                    } else {
                        rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64
                    }
                };
                AverageRow {
                    variant,
                    accuracy: mean(|r| r.metrics.accuracy),
                    precision: mean(|r| r.metrics.precision),
                    recall: mean(|r| r.metrics.recall),
                }
            })
            .collect();
        self
    }

    /// One CSV row per run, sorted by (size, op, variant).
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.6},{},{},{}\n",
                r.size,
                r.op,
                r.variant,
                r.metrics.accuracy,
                r.metrics.precision,
                r.metrics.recall,
                r.train_examples,
                r.augmented_examples,
                r.seed
            ));
        }
        out
    }

    /// Ablation only: the per-operation augmented-set size grid.
    pub fn sizes_csv(&self) -> Option<String> {
        if self.aug_set_sizes.is_empty() {
            return None;
        }
        let ops: Vec<&str> = ALL_OPS.iter().map(|o| o.name()).collect();
        let mut out = format!("size,{}\n", ops.join(","));
        for (size, per_op) in &self.aug_set_sizes {
            let cells: Vec<String> = ops
                .iter()
                .map(|op| {
                    per_op
                        .iter()
                        .find(|(name, _)| name == op)
                        .map_or(String::from("0"), |(_, n)| n.to_string())
                })
                .collect();
            out.push_str(&format!("{},{}\n", size, cells.join(",")));
        }
        Some(out)
    }

    /// Plain-text tables, one block per metric per operation, with model and
    /// augmented rows over size columns, plus an average block in ablation
    /// mode and metadata at the end.
    pub fn render_tables(&self) -> String {
        let mut sizes: Vec<usize> = self.rows.iter().map(|r| r.size).collect();
        sizes.sort_unstable();
        sizes.dedup();
        let mut ops: Vec<String> = self.rows.iter().map(|r| r.op.clone()).collect();
        ops.sort();
        ops.dedup();

        let cell = |op: &str, size: usize, variant: Variant, f: fn(&Metrics) -> f64| {
            self.rows
                .iter()
                .find(|r| r.op == op && r.size == size && r.variant == variant)
                .map(|r| f(&r.metrics))
        };
        let mut out = String::new();
        let metrics: [(&str, fn(&Metrics) -> f64); 3] = [
            ("accuracy", |m| m.accuracy),
            ("precision", |m| m.precision),
            ("recall", |m| m.recall),
        ];
        for (metric_name, getter) in metrics {
            for op in &ops {
                out.push_str(&format!("== {metric_name} (op={op}) ==\n"));
                out.push_str(&format!("{:<10}", "size"));
                for s in &sizes {
                    out.push_str(&format!("{s:>10}"));
                }
                out.push('\n');
                for variant in [Variant::Baseline, Variant::Augmented] {
                    let label = match variant {
                        Variant::Baseline => "cbow",
                        Variant::Augmented => " +reda",
                    };
                    out.push_str(&format!("{label:<10}"));
                    for &s in &sizes {
                        match cell(op, s, variant, getter) {
                            Some(v) => out.push_str(&format!("{v:>10.4}")),
                            None => out.push_str(&format!("{:>10}", "-")),
                        }
                    }
                    out.push('\n');
                }
            }
            if ops.len() > 1 {
                out.push_str(&format!("== {metric_name} (average over ops) ==\n"));
                out.push_str(&format!("{:<10}", "size"));
                for s in &sizes {
                    out.push_str(&format!("{s:>10}"));
                }
                out.push('\n');
                for variant in [Variant::Baseline, Variant::Augmented] {
                    let label = match variant {
                        Variant::Baseline => "cbow",
                        Variant::Augmented => " +reda",
                    };
                    out.push_str(&format!("{label:<10}"));
                    for &s in &sizes {
                        let vals: Vec<f64> = ops
                            .iter()
                            .filter_map(|op| cell(op, s, variant, getter))
                            .collect();
                        if vals.is_empty() {
                            out.push_str(&format!("{:>10}", "-"));
                        } else {
                            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                            out.push_str(&format!("{mean:>10.4}"));
                        }
                    }
                    out.push('\n');
                }
            }
        }
        for avg in &self.averages {
            out.push_str(&format!(
                "average {} accuracy {:.4} precision {:.4} recall {:.4}\n",
                avg.variant, avg.accuracy, avg.precision, avg.recall
            ));
        }
        for (size, n_aug) in &self.n_aug_by_size {
            out.push_str(&format!("meta size {size} n_aug {n_aug}\n"));
        }
        out.push_str(&format!("meta master_seed {}\n", self.master_seed));
        out.push_str("meta subsampling stratified\n");
        out
    }
}

fn variant_rank(v: Variant) -> u8 {
    match v {
        Variant::Baseline => 0,
        Variant::Augmented => 1,
    }
}

/// Label-balanced synthetic matching task. Each text is four to eight filler
/// tokens plus one topic token; a pair is matched exactly when both texts
/// carry the same topic token.
///
/// The topic set is split into a matched pool and a mismatched pool: matched
/// pairs share one topic from the first, mismatched pairs carry two distinct
/// topics from the second. The shared-topic law holds either way, and the
/// pool split gives the task a lexical signal that a mean-pooled encoder can
/// pick up within the short fixed training budget.
pub fn generate_toy_corpus(n_pairs: usize, vocab_size: usize, seed: u64) -> Corpus {
    assert!(n_pairs % 2 == 0, "n_pairs must be even");
    assert!(vocab_size >= 20, "vocab_size must be at least 20");
    let n_topics = (vocab_size / 5).max(4);
    let n_matched = (n_topics / 2).max(1);
    let n_mismatched = n_topics - n_matched;
    let n_fillers = vocab_size - n_topics;
    let topics: Vec<String> = (0..n_topics).map(|i| format!("t{i}")).collect();
    let fillers: Vec<String> = (0..n_fillers).map(|i| format!("w{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let make_text = |topic: &str, rng: &mut ChaCha8Rng| {
        let n_fill = rng.gen_range(4..=8);
        let mut tokens: Vec<&str> = (0..n_fill)
            .map(|_| fillers[rng.gen_range(0..n_fillers)].as_str())
            .collect();
        tokens.insert(rng.gen_range(0..=tokens.len()), topic);
        tokens.join(" ")
    };
    let mut examples = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        if i % 2 == 0 {
            let topic = &topics[rng.gen_range(0..n_matched)];
            let a = make_text(topic, &mut rng);
            let b = make_text(topic, &mut rng);
            examples.push(PairExample::new(a, b, 1));
        } else {
            let t1 = rng.gen_range(0..n_mismatched);
            let mut t2 = rng.gen_range(0..n_mismatched - 1);
            if t2 >= t1 {
                t2 += 1;
            }
            let a = make_text(&topics[n_matched + t1], &mut rng);
            let b = make_text(&topics[n_matched + t2], &mut rng);
            examples.push(PairExample::new(a, b, 0));
        }
    }
    Corpus::new(examples, SplitName::Train)
}

/// Sparse synonym lexicon over the toy filler vocabulary: roughly six in ten
/// filler words get two invented synonyms. Topic tokens never get synonyms,
/// so replacement cannot silently flip a label.
pub fn generate_toy_lexicon(vocab_size: usize, seed: u64) -> SynonymLexicon {
    assert!(vocab_size >= 20, "vocab_size must be at least 20");
    let n_topics = (vocab_size / 5).max(4);
    let n_fillers = vocab_size - n_topics;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<(String, Vec<String>)> = (0..n_fillers)
        .filter(|_| rng.gen_bool(0.6))
        .map(|i| {
            (
                format!("w{i}"),
                vec![format!("w{i}x"), format!("w{i}y")],
            )
        })
        .collect();
    SynonymLexicon::from_entries(LanguageMode::English, entries)
}

/// Label-stratified subsample of `size` examples under `seed`; selected
/// examples keep their corpus order.
pub fn stratified_subsample(corpus: &Corpus, size: usize, seed: u64) -> Corpus {
    assert!(size <= corpus.len());
    let mut pos: Vec<usize> = (0..corpus.len())
        .filter(|&i| corpus.examples[i].label == 1)
        .collect();
    let mut neg: Vec<usize> = (0..corpus.len())
        .filter(|&i| corpus.examples[i].label == 0)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let want_pos = (size / 2).min(pos.len());
    let want_neg = (size - want_pos).min(neg.len());
    let want_pos = size - want_neg; // backfill if the negative pool ran short
    let mut selected: Vec<usize> = pos[..want_pos].iter().chain(&neg[..want_neg]).copied().collect();
    selected.sort_unstable();
    Corpus::new(
        selected
            .into_iter()
            .map(|i| corpus.examples[i].clone())
            .collect(),
        corpus.split_name,
    )
}

// Stream tags for per-run seed derivation.
const STREAM_SUBSAMPLE: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_AUGMENT: u64 = 3;

fn run_seed(master: u64, purpose: u64, size: usize, op_idx: u64, variant: u64) -> u64 {
    let stream = (size as u64)
        ^ (op_idx.wrapping_add(1) << 40)
        ^ (variant.wrapping_add(1) << 48)
        ^ (purpose << 56);
    derive_seed(master, stream)
}

struct RunOutcome {
    row: RunRow,
    aug_size: Option<(String, usize)>,
}

fn tokenizer_for(mode: LanguageMode, lex: &SynonymLexicon) -> Tokenizer {
    match mode {
        LanguageMode::English => Tokenizer::new(LanguageMode::English),
        LanguageMode::Chinese => Tokenizer::with_headwords(
            LanguageMode::Chinese,
            lex.headwords().map(str::to_string),
        ),
    }
}

fn train_and_eval(
    train_set: &Corpus,
    data: &ExperimentData,
    spec: &SweepSpec,
    tokenizer: &Tokenizer,
    seed: u64,
) -> Result<Metrics> {
    let cfg = TrainConfig {
        seed,
        ..spec.train_cfg.clone()
    };
    let trained = train(train_set, &data.dev, &cfg, tokenizer)?;
    evaluate(&trained.params, &data.test, &trained.vocab, tokenizer)
}

fn do_run(
    data: &ExperimentData,
    spec: &SweepSpec,
    lex: &SynonymLexicon,
    tokenizer: &Tokenizer,
    subsample: &Corpus,
    size: usize,
    ops: &[EditOp],
    op_label: &str,
    op_idx: u64,
) -> Result<RunOutcome> {
    let aug_cfg = RedaConfig {
        seed: run_seed(spec.master_seed, STREAM_AUGMENT, size, op_idx, 1),
        ..spec.reda_cfg.clone()
    };
    let (augmented, _) = augment_corpus(tokenizer, subsample, ops, &aug_cfg, lex)?;
    let train_seed = run_seed(spec.master_seed, STREAM_TRAIN, size, op_idx, 1);
    let metrics = train_and_eval(&augmented, data, spec, tokenizer, train_seed)?;
    Ok(RunOutcome {
        row: RunRow {
            size,
            op: op_label.to_string(),
            variant: Variant::Augmented,
            metrics,
            train_examples: size,
            augmented_examples: augmented.len(),
            seed: train_seed,
        },
        aug_size: Some((op_label.to_string(), augmented.len())),
    })
}

fn baseline_run(
    data: &ExperimentData,
    spec: &SweepSpec,
    tokenizer: &Tokenizer,
    subsample: &Corpus,
    size: usize,
) -> Result<(Metrics, u64)> {
    let train_seed = run_seed(spec.master_seed, STREAM_TRAIN, size, 0, 0);
    let metrics = train_and_eval(subsample, data, spec, tokenizer, train_seed)?;
    Ok((metrics, train_seed))
}

fn check_spec(data: &ExperimentData, spec: &SweepSpec) -> Result<()> {
    spec.reda_cfg.validate()?;
    if spec.sizes.is_empty() {
        return Err(Error::InvalidConfig("no sweep sizes given".into()));
    }
    if let Some(&max) = spec.sizes.iter().max() {
        if max > data.train_pool.len() {
            return Err(Error::InvalidConfig(format!(
                "sweep size {} exceeds train pool of {}",
                max,
                data.train_pool.len()
            )));
        }
    }
    Ok(())
}

/// Size sweep with all five operations combined: per size, one baseline run
/// on the originals and one run on the augmented superset, both evaluated on
/// the fixed test split.
pub fn run_size_sweep(
    data: &ExperimentData,
    spec: &SweepSpec,
    lex: &SynonymLexicon,
) -> Result<SweepReport> {
    check_spec(data, spec)?;
    let tokenizer = tokenizer_for(spec.mode, lex);
    let rows: Vec<Vec<RunRow>> = spec
        .sizes
        .par_iter()
        .map(|&size| {
            let subsample = stratified_subsample(
                &data.train_pool,
                size,
                run_seed(spec.master_seed, STREAM_SUBSAMPLE, size, 0, 0),
            );
            let (metrics, seed) = baseline_run(data, spec, &tokenizer, &subsample, size)?;
            let baseline = RunRow {
                size,
                op: "combined".to_string(),
                variant: Variant::Baseline,
                metrics,
                train_examples: size,
                augmented_examples: size,
                seed,
            };
            let outcome = do_run(
                data, spec, lex, &tokenizer, &subsample, size, &ALL_OPS, "combined", 0,
            )?;
            Ok(vec![baseline, outcome.row])
        })
        .collect::<Result<_>>()?;
    let report = SweepReport {
        ops_mode: OpsMode::Combined,
        rows: rows.into_iter().flatten().collect(),
        averages: Vec::new(),
        n_aug_by_size: spec
            .sizes
            .iter()
            .map(|&s| (s, spec.reda_cfg.n_aug_for(s)))
            .collect(),
        aug_set_sizes: Vec::new(),
        master_seed: spec.master_seed,
    };
    Ok(report.finish())
}

/// Per-operation ablation: per size, one baseline run plus one augmented run
/// per operation. The baseline metrics are repeated in each operation's
/// (size, op) cell so every operation column pairs with its baseline.
pub fn run_ablation(
    data: &ExperimentData,
    spec: &SweepSpec,
    lex: &SynonymLexicon,
) -> Result<SweepReport> {
    check_spec(data, spec)?;
    let tokenizer = tokenizer_for(spec.mode, lex);
    let per_size: Vec<(Vec<RunRow>, (usize, Vec<(String, usize)>))> = spec
        .sizes
        .par_iter()
        .map(|&size| {
            let subsample = stratified_subsample(
                &data.train_pool,
                size,
                run_seed(spec.master_seed, STREAM_SUBSAMPLE, size, 0, 0),
            );
            let (base_metrics, base_seed) =
                baseline_run(data, spec, &tokenizer, &subsample, size)?;
            let mut rows = Vec::with_capacity(ALL_OPS.len() * 2);
            let mut sizes_row = Vec::with_capacity(ALL_OPS.len());
            for (op_idx, &op) in ALL_OPS.iter().enumerate() {
                rows.push(RunRow {
                    size,
                    op: op.name().to_string(),
                    variant: Variant::Baseline,
                    metrics: base_metrics,
                    train_examples: size,
                    augmented_examples: size,
                    seed: base_seed,
                });
                let outcome = do_run(
                    data,
                    spec,
                    lex,
                    &tokenizer,
                    &subsample,
                    size,
                    &[op],
                    op.name(),
                    op_idx as u64 + 1,
                )?;
                sizes_row.push(outcome.aug_size.expect("augmented run reports its size"));
                rows.push(outcome.row);
            }
            Ok((rows, (size, sizes_row)))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut aug_set_sizes = Vec::new();
    for (r, s) in per_size {
        rows.extend(r);
        aug_set_sizes.push(s);
    }
    aug_set_sizes.sort_by_key(|(size, _)| *size);
    let report = SweepReport {
        ops_mode: OpsMode::Ablation,
        rows,
        averages: Vec::new(),
        n_aug_by_size: spec
            .sizes
            .iter()
            .map(|&s| (s, spec.reda_cfg.n_aug_for(s)))
            .collect(),
        aug_set_sizes,
        master_seed: spec.master_seed,
    };
    Ok(report.finish())
}
