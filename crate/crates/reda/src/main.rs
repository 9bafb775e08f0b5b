//! Batch command-line front end. Data problems exit 1 with a one-line
//! diagnostic; usage problems exit 2 (clap's default).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use reda::engine::{EditOp, RedaConfig};
use reda::error::Result;
use reda::experiment::{
    generate_toy_corpus, generate_toy_lexicon, run_ablation, run_size_sweep, ExperimentData,
    OpsMode, SweepSpec,
};
use reda::lexicon::SynonymLexicon;
use reda::matcher::{evaluate, load_checkpoint, save_checkpoint, train, TrainConfig};
use reda::pairs::{augment_corpus, balanced_split, corpus_stats, Corpus, SplitName};
use reda::text::{LanguageMode, Tokenizer};

#[derive(Parser)]
#[command(
    name = "reda",
    version,
    about = "Random token-level text augmentation for text-pair corpora, with a train/eval harness"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores). Output is
    /// identical regardless of this setting.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LangFlag {
    En,
    Zh,
}

impl From<LangFlag> for LanguageMode {
    fn from(flag: LangFlag) -> Self {
        match flag {
            LangFlag::En => LanguageMode::English,
            LangFlag::Zh => LanguageMode::Chinese,
        }
    }
}

fn parse_ops(s: &str) -> std::result::Result<Vec<EditOp>, String> {
    let ops: Vec<EditOp> = s
        .split(',')
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()?;
    if ops.is_empty() {
        return Err("at least one operation is required".into());
    }
    Ok(ops)
}

fn parse_sizes(s: &str) -> std::result::Result<Vec<usize>, String> {
    let sizes: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse().map_err(|e| format!("bad size {t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if sizes.is_empty() {
        return Err("at least one size is required".into());
    }
    Ok(sizes)
}

#[derive(Args)]
struct RedaFlags {
    #[arg(long = "rate-sr", default_value_t = 0.2)]
    rate_sr: f64,
    #[arg(long = "rate-rs", default_value_t = 0.2)]
    rate_rs: f64,
    #[arg(long = "rate-ri", default_value_t = 0.1)]
    rate_ri: f64,
    #[arg(long = "rate-rd", default_value_t = 0.1)]
    rate_rd: f64,
    /// Unique augmentations per text for corpora below the threshold.
    #[arg(long = "naug-small", default_value_t = 2)]
    naug_small: usize,
    /// Unique augmentations per text for corpora at or above the threshold.
    #[arg(long = "naug-large", default_value_t = 1)]
    naug_large: usize,
    #[arg(long, default_value_t = 50_000)]
    threshold: usize,
    /// Distinct operations drawn by Random Mix, lower bound (default 2).
    #[arg(long = "rm-min-ops")]
    rm_min_ops: Option<usize>,
    /// Upper bound (default 4 for augment, 2 for sweep/ablate).
    #[arg(long = "rm-max-ops")]
    rm_max_ops: Option<usize>,
    /// Edits per operation selected by Random Mix (default 1).
    #[arg(long = "rm-edits")]
    rm_edits: Option<usize>,
    #[arg(long = "retry-factor", default_value_t = 10)]
    retry_factor: usize,
}

impl RedaFlags {
    fn to_config(&self, seed: u64, experiment: bool) -> RedaConfig {
        let base = if experiment {
            RedaConfig::experiment_preset()
        } else {
            RedaConfig::default()
        };
        RedaConfig {
            rate_sr: self.rate_sr,
            rate_rs: self.rate_rs,
            rate_ri: self.rate_ri,
            rate_rd: self.rate_rd,
            rm_min_ops: self.rm_min_ops.unwrap_or(base.rm_min_ops),
            rm_max_ops: self.rm_max_ops.unwrap_or(base.rm_max_ops),
            rm_edits_per_op: self.rm_edits.unwrap_or(base.rm_edits_per_op),
            n_aug_small: self.naug_small,
            n_aug_large: self.naug_large,
            small_corpus_threshold: self.threshold,
            retry_factor: self.retry_factor,
            seed,
        }
    }
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long, default_value_t = 3)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 0.0005)]
    lr: f64,
}

impl TrainFlags {
    fn to_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch,
            learning_rate: self.lr,
            epochs: self.epochs,
            seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Augment a corpus TSV and write the superset plus a report.
    Augment {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Synonym lexicon TSV; omit for an empty lexicon.
        #[arg(long)]
        lex: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "en")]
        lang: LangFlag,
        /// Comma-separated operations out of sr,ri,rs,rd,rm.
        #[arg(long, value_parser = parse_ops, default_value = "sr,ri,rs,rd,rm")]
        ops: std::vec::Vec<EditOp>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Where to write the CSV report (default: <out>.report.csv).
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        reda: RedaFlags,
    },
    /// Print matched/mismatched counts for a corpus TSV.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Draw label-balanced train/dev/test splits from a corpus TSV.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        /// Split sizes as train,dev,test (all even).
        #[arg(long, value_parser = parse_sizes)]
        sizes: std::vec::Vec<usize>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output prefix; writes <prefix>.train.tsv, .dev.tsv, .test.tsv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the matcher and write a checkpoint.
    Train {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lex: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "en")]
        lang: LangFlag,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Evaluate a checkpoint on a corpus TSV.
    Eval {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lex: Option<PathBuf>,
    },
    /// Size sweep with all five operations combined.
    Sweep(ExperimentArgs),
    /// Per-operation ablation over the size grid.
    Ablate(ExperimentArgs),
    /// Generate a synthetic label-balanced matching corpus.
    Toygen {
        /// Number of pairs (even).
        #[arg(long)]
        pairs: usize,
        #[arg(long, default_value_t = 30)]
        vocab: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write a sparse synonym lexicon over the toy vocabulary.
        #[arg(long = "lex-out")]
        lex_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// Train pool TSV; sweep sizes subsample from it.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    dev: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    lex: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "en")]
    lang: LangFlag,
    #[arg(long, value_parser = parse_sizes)]
    sizes: std::vec::Vec<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Results CSV path. Ablation also writes <out stem>_sizes.csv.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    reda: RedaFlags,
    #[command(flatten)]
    train: TrainFlags,
}

fn load_lexicon(path: &Option<PathBuf>, mode: LanguageMode) -> Result<SynonymLexicon> {
    match path {
        Some(p) => SynonymLexicon::load(p, mode),
        None => Ok(SynonymLexicon::empty(mode)),
    }
}

fn tokenizer_for(mode: LanguageMode, lex: &SynonymLexicon) -> Tokenizer {
    match mode {
        LanguageMode::English => Tokenizer::new(mode),
        LanguageMode::Chinese => {
            Tokenizer::with_headwords(mode, lex.headwords().map(str::to_string))
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Augment {
            input,
            out,
            lex,
            lang,
            ops,
            seed,
            report,
            reda,
        } => {
            let mode = lang.into();
            let cfg = reda.to_config(seed, false);
            cfg.validate()?;
            let lexicon = load_lexicon(&lex, mode)?;
            let tokenizer = tokenizer_for(mode, &lexicon);
            let corpus = Corpus::read_tsv(&input, SplitName::Train)?;
            let (augmented, aug_report) =
                augment_corpus(&tokenizer, &corpus, &ops, &cfg, &lexicon)?;
            augmented.write_tsv(&out)?;
            let report_path = report.unwrap_or_else(|| {
                let mut p = out.clone().into_os_string();
                p.push(".report.csv");
                PathBuf::from(p)
            });
            std::fs::write(&report_path, aug_report.to_csv())?;
            print!("{}", aug_report.to_kv_block());
            Ok(())
        }
        Command::Stats { input } => {
            let corpus = Corpus::read_tsv(&input, SplitName::Train)?;
            let stats = corpus_stats(&corpus);
            println!(
                "total {} matched {} mismatched {}",
                stats.total, stats.matched, stats.mismatched
            );
            Ok(())
        }
        Command::Split {
            input,
            sizes,
            seed,
            out,
        } => {
            if sizes.len() != 3 {
                return Err(reda::Error::InvalidConfig(
                    "--sizes needs exactly train,dev,test".into(),
                ));
            }
            let corpus = Corpus::read_tsv(&input, SplitName::Train)?;
            let (train_c, dev_c, test_c) =
                balanced_split(&corpus.examples, sizes[0], sizes[1], sizes[2], seed)?;
            for (corpus, suffix) in [(&train_c, "train"), (&dev_c, "dev"), (&test_c, "test")] {
                let mut path = out.clone().into_os_string();
                path.push(format!(".{suffix}.tsv"));
                corpus.write_tsv(PathBuf::from(path))?;
                let stats = corpus_stats(corpus);
                println!(
                    "{suffix} total {} matched {} mismatched {}",
                    stats.total, stats.matched, stats.mismatched
                );
            }
            Ok(())
        }
        Command::Train {
            input,
            dev,
            model,
            lex,
            lang,
            seed,
            train: train_flags,
        } => {
            let mode = lang.into();
            let lexicon = load_lexicon(&lex, mode)?;
            let tokenizer = tokenizer_for(mode, &lexicon);
            let train_corpus = Corpus::read_tsv(&input, SplitName::Train)?;
            let dev_corpus = Corpus::read_tsv(&dev, SplitName::Dev)?;
            let cfg = train_flags.to_config(seed);
            let trained = train(&train_corpus, &dev_corpus, &cfg, &tokenizer)?;
            for (epoch, metrics) in trained.dev_history.iter().enumerate() {
                println!(
                    "epoch {} dev accuracy {:.4} precision {:.4} recall {:.4}",
                    epoch + 1,
                    metrics.accuracy,
                    metrics.precision,
                    metrics.recall
                );
            }
            save_checkpoint(&model, &trained.params, &trained.vocab, mode)?;
            Ok(())
        }
        Command::Eval { input, model, lex } => {
            let (params, vocab, mode) = load_checkpoint(&model)?;
            let lexicon = load_lexicon(&lex, mode)?;
            let tokenizer = tokenizer_for(mode, &lexicon);
            let corpus = Corpus::read_tsv(&input, SplitName::Test)?;
            let m = evaluate(&params, &corpus, &vocab, &tokenizer)?;
            println!(
                "accuracy {:.4} precision {:.4} recall {:.4} tp {} fp {} tn {} fn {}",
                m.accuracy, m.precision, m.recall, m.true_pos, m.false_pos, m.true_neg,
                m.false_neg
            );
            Ok(())
        }
        Command::Sweep(args) => run_experiment(args, OpsMode::Combined),
        Command::Ablate(args) => run_experiment(args, OpsMode::Ablation),
        Command::Toygen {
            pairs,
            vocab,
            seed,
            out,
            lex_out,
        } => {
            if pairs % 2 != 0 {
                return Err(reda::Error::InvalidConfig("--pairs must be even".into()));
            }
            if vocab < 20 {
                return Err(reda::Error::InvalidConfig("--vocab must be >= 20".into()));
            }
            generate_toy_corpus(pairs, vocab, seed).write_tsv(&out)?;
            if let Some(lex_path) = lex_out {
                let lexicon = generate_toy_lexicon(vocab, seed);
                let mut headwords: Vec<&str> = lexicon.headwords().collect();
                headwords.sort_unstable();
                let mut content = String::new();
                for head in headwords {
                    let syns = lexicon.synonyms_of(head);
                    content.push_str(head);
                    for s in syns {
                        content.push('\t');
                        content.push_str(s);
                    }
                    content.push('\n');
                }
                std::fs::write(lex_path, content)?;
            }
            Ok(())
        }
    }
}

fn run_experiment(args: ExperimentArgs, ops_mode: OpsMode) -> Result<()> {
    let mode = args.lang.into();
    let lexicon = load_lexicon(&args.lex, mode)?;
    let data = ExperimentData {
        train_pool: Corpus::read_tsv(&args.input, SplitName::Train)?,
        dev: Corpus::read_tsv(&args.dev, SplitName::Dev)?,
        test: Corpus::read_tsv(&args.test, SplitName::Test)?,
    };
    let spec = SweepSpec {
        sizes: args.sizes.clone(),
        ops_mode,
        reda_cfg: args.reda.to_config(args.seed, true),
        train_cfg: args.train.to_config(args.seed),
        mode,
        master_seed: args.seed,
    };
    let report = match ops_mode {
        OpsMode::Combined => run_size_sweep(&data, &spec, &lexicon)?,
        OpsMode::Ablation => run_ablation(&data, &spec, &lexicon)?,
    };
    std::fs::write(&args.out, report.to_csv())?;
    if let Some(sizes_csv) = report.sizes_csv() {
        std::fs::write(sizes_path(&args.out), sizes_csv)?;
    }
    print!("{}", report.render_tables());
    Ok(())
}

fn sizes_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".to_string());
    let ext = out
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    out.with_file_name(format!("{stem}_sizes{ext}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        // Ignore failure: the global pool may already exist in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
