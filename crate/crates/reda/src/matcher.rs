//! Bag-of-words text-pair matcher trained from scratch.
//!
//! Each text is mean-pooled over its word embeddings, the two encodings are
//! concatenated and run through Linear -> Tanh -> Linear to two logits.
//! Gradients are derived by hand and optimized with Adam under softmax cross
//! entropy. No pretrained embeddings, no early stopping.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pairs::Corpus;
use crate::text::{LanguageMode, Tokenizer};

/// Dense row-major matrix of 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn uniform(rows: usize, cols: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-scale..=scale))
            .collect();
        Mat { rows, cols, data }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Token-to-index table. Index 0 is reserved for out-of-vocabulary tokens;
/// known tokens are numbered from 1 in order of first appearance in the
/// training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    index: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocab {
    fn new() -> Self {
        Vocab {
            index: HashMap::new(),
            tokens: Vec::new(),
        }
    }

    fn insert(&mut self, token: &str) {
        if !self.index.contains_key(token) {
            self.tokens.push(token.to_string());
            self.index.insert(token.to_string(), self.tokens.len());
        }
    }

    /// Total vocabulary size including the OOV slot.
    pub fn size(&self) -> usize {
        self.tokens.len() + 1
    }

    /// Index of a token; unknown tokens map to 0.
    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(0)
    }

    /// Known tokens in index order (index 1 first).
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    fn from_tokens(tokens: Vec<String>) -> Self {
        let mut vocab = Vocab::new();
        for t in tokens {
            vocab.insert(&t);
        }
        vocab
    }
}

/// Build the vocabulary from both sides of every training example, indexed
/// by first appearance.
pub fn build_vocab(corpus: &Corpus, tokenizer: &Tokenizer) -> Result<Vocab> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut vocab = Vocab::new();
    for ex in &corpus.examples {
        for text in [&ex.text_a, &ex.text_b] {
            for token in tokenizer.tokenize(text)?.tokens() {
                vocab.insert(token);
            }
        }
    }
    Ok(vocab)
}

/// All trainable parameters. The same shape doubles as the gradient and
/// Adam-moment container.
#[derive(Debug, Clone, PartialEq)]
pub struct MatcherParams {
    /// V x d embedding table; row 0 is the OOV embedding.
    pub embed: Mat,
    /// 2d x h weight of the first linear layer.
    pub w1: Mat,
    pub b1: Vec<f64>,
    /// h x 2 weight of the output layer.
    pub w2: Mat,
    pub b2: Vec<f64>,
}

impl MatcherParams {
    pub fn init(
        vocab_size: usize,
        embed_dim: usize,
        hidden_dim: usize,
        init_scale: f64,
        rng: &mut impl Rng,
    ) -> Self {
        MatcherParams {
            embed: Mat::uniform(vocab_size, embed_dim, init_scale, rng),
            w1: Mat::uniform(2 * embed_dim, hidden_dim, init_scale, rng),
            b1: (0..hidden_dim)
                .map(|_| rng.gen_range(-init_scale..=init_scale))
                .collect(),
            w2: Mat::uniform(hidden_dim, 2, init_scale, rng),
            b2: (0..2).map(|_| rng.gen_range(-init_scale..=init_scale)).collect(),
        }
    }

    pub fn zeros(vocab_size: usize, embed_dim: usize, hidden_dim: usize) -> Self {
        MatcherParams {
            embed: Mat::zeros(vocab_size, embed_dim),
            w1: Mat::zeros(2 * embed_dim, hidden_dim),
            b1: vec![0.0; hidden_dim],
            w2: Mat::zeros(hidden_dim, 2),
            b2: vec![0.0; 2],
        }
    }

    pub fn zeros_like(&self) -> Self {
        MatcherParams::zeros(self.vocab_size(), self.embed_dim(), self.hidden_dim())
    }

    pub fn vocab_size(&self) -> usize {
        self.embed.rows
    }

    pub fn embed_dim(&self) -> usize {
        self.embed.cols
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols
    }

    fn tensors(&self) -> [&[f64]; 5] {
        [
            &self.embed.data,
            &self.w1.data,
            &self.b1,
            &self.w2.data,
            &self.b2,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Vec<f64>; 5] {
        [
            &mut self.embed.data,
            &mut self.w1.data,
            &mut self.b1,
            &mut self.w2.data,
            &mut self.b2,
        ]
    }
}

/// A tokenized, vocabulary-encoded example: indices for both sides plus the
/// label.
pub type EncodedExample = (Vec<usize>, Vec<usize>, u8);

pub fn encode_corpus(
    corpus: &Corpus,
    vocab: &Vocab,
    tokenizer: &Tokenizer,
) -> Result<Vec<EncodedExample>> {
    corpus
        .examples
        .iter()
        .map(|ex| {
            let a = tokenizer
                .tokenize(&ex.text_a)?
                .tokens()
                .iter()
                .map(|t| vocab.id(t))
                .collect();
            let b = tokenizer
                .tokenize(&ex.text_b)?
                .tokens()
                .iter()
                .map(|t| vocab.id(t))
                .collect();
            Ok((a, b, ex.label))
        })
        .collect()
}

fn mean_pool(embed: &Mat, idx: &[usize], out: &mut [f64]) {
    out.fill(0.0);
    for &i in idx {
        for (o, e) in out.iter_mut().zip(embed.row(i)) {
            *o += e;
        }
    }
    let inv = 1.0 / idx.len() as f64;
    for o in out.iter_mut() {
        *o *= inv;
    }
}

struct ForwardPass {
    x: Vec<f64>,      // concat(enc_a, enc_b), length 2d
    h: Vec<f64>,      // tanh hidden, length hidden_dim
    logits: [f64; 2],
}

fn forward_pass(params: &MatcherParams, a_idx: &[usize], b_idx: &[usize]) -> ForwardPass {
    let d = params.embed_dim();
    let hidden = params.hidden_dim();
    let mut x = vec![0.0; 2 * d];
    mean_pool(&params.embed, a_idx, &mut x[..d]);
    mean_pool(&params.embed, b_idx, &mut x[d..]);
    let mut h = vec![0.0; hidden];
    for (j, hj) in h.iter_mut().enumerate() {
        let mut acc = params.b1[j];
        for (i, &xi) in x.iter().enumerate() {
            acc += xi * params.w1.data[i * hidden + j];
        }
        *hj = acc.tanh();
    }
    let mut logits = [params.b2[0], params.b2[1]];
    for (j, &hj) in h.iter().enumerate() {
        logits[0] += hj * params.w2.data[j * 2];
        logits[1] += hj * params.w2.data[j * 2 + 1];
    }
    ForwardPass { x, h, logits }
}

/// Two-class logits for a pair of encoded texts.
pub fn forward(params: &MatcherParams, a_idx: &[usize], b_idx: &[usize]) -> Result<[f64; 2]> {
    debug_assert!(!a_idx.is_empty() && !b_idx.is_empty());
    for &i in a_idx.iter().chain(b_idx) {
        if i >= params.vocab_size() {
            return Err(Error::IndexOutOfRange {
                index: i,
                vocab: params.vocab_size(),
            });
        }
    }
    Ok(forward_pass(params, a_idx, b_idx).logits)
}

fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let sum = e0 + e1;
    [e0 / sum, e1 / sum]
}

fn log_sum_exp2(logits: [f64; 2]) -> f64 {
    let m = logits[0].max(logits[1]);
    ((logits[0] - m).exp() + (logits[1] - m).exp()).ln() + m
}

/// Mean cross-entropy loss over a batch plus exact analytic gradients for
/// every parameter.
pub fn loss_and_grads(params: &MatcherParams, batch: &[&EncodedExample]) -> (f64, MatcherParams) {
    assert!(!batch.is_empty());
    let d = params.embed_dim();
    let hidden = params.hidden_dim();
    let mut grads = params.zeros_like();
    let mut loss = 0.0;
    let inv_batch = 1.0 / batch.len() as f64;

    for &(a_idx, b_idx, label) in batch {
        let pass = forward_pass(params, a_idx, b_idx);
        loss += (log_sum_exp2(pass.logits) - pass.logits[*label as usize]) * inv_batch;

        let probs = softmax2(pass.logits);
        let mut dlogits = [probs[0] * inv_batch, probs[1] * inv_batch];
        dlogits[*label as usize] -= inv_batch;

        // Output layer.
        grads.b2[0] += dlogits[0];
        grads.b2[1] += dlogits[1];
        let mut dh = vec![0.0; hidden];
        for j in 0..hidden {
            grads.w2.data[j * 2] += pass.h[j] * dlogits[0];
            grads.w2.data[j * 2 + 1] += pass.h[j] * dlogits[1];
            dh[j] = params.w2.data[j * 2] * dlogits[0] + params.w2.data[j * 2 + 1] * dlogits[1];
        }

        // Tanh and the first linear layer.
        let mut dx = vec![0.0; 2 * d];
        for j in 0..hidden {
            let dpre = dh[j] * (1.0 - pass.h[j] * pass.h[j]);
            grads.b1[j] += dpre;
            for (i, &xi) in pass.x.iter().enumerate() {
                grads.w1.data[i * hidden + j] += xi * dpre;
                dx[i] += params.w1.data[i * hidden + j] * dpre;
            }
        }

        // Mean pooling distributes gradient evenly over each text's tokens.
        let inv_a = 1.0 / a_idx.len() as f64;
        for &i in a_idx {
            let row = grads.embed.row_mut(i);
            for (r, g) in row.iter_mut().zip(&dx[..d]) {
                *r += g * inv_a;
            }
        }
        let inv_b = 1.0 / b_idx.len() as f64;
        for &i in b_idx {
            let row = grads.embed.row_mut(i);
            for (r, g) in row.iter_mut().zip(&dx[d..]) {
                *r += g * inv_b;
            }
        }
    }
    (loss, grads)
}

/// Adam first/second moment accumulators, same shapes as the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: MatcherParams,
    v: MatcherParams,
}

impl AdamState {
    pub fn new(params: &MatcherParams) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

/// One Adam update with bias correction; `t` is the 1-based step index.
pub fn adam_step(
    params: &mut MatcherParams,
    grads: &MatcherParams,
    state: &mut AdamState,
    t: usize,
    cfg: &TrainConfig,
) {
    assert!(t >= 1);
    let b1 = cfg.adam_beta1;
    let b2 = cfg.adam_beta2;
    let bc1 = 1.0 - b1.powi(t as i32);
    let bc2 = 1.0 - b2.powi(t as i32);
    let grads_t = grads.tensors();
    let mut m_t = state.m.tensors_mut();
    let mut v_t = state.v.tensors_mut();
    let mut p_t = params.tensors_mut();
    for k in 0..5 {
        let g = grads_t[k];
        let m = &mut m_t[k];
        let v = &mut v_t[k];
        let p = &mut p_t[k];
        for i in 0..g.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub init_scale: f64,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            learning_rate: 0.0005,
            epochs: 3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            init_scale: 0.05,
            embed_dim: 128,
            hidden_dim: 128,
            seed: 42,
        }
    }
}

/// Classification quality with the matched class (label 1) as positive.
/// Precision and recall are 0 when their denominator is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl Metrics {
    pub fn from_counts(true_pos: u64, false_pos: u64, true_neg: u64, false_neg: u64) -> Self {
        let total = true_pos + false_pos + true_neg + false_neg;
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Metrics {
            accuracy: ratio(true_pos + true_neg, total),
            precision: ratio(true_pos, true_pos + false_pos),
            recall: ratio(true_pos, true_pos + false_neg),
            true_pos,
            false_pos,
            true_neg,
            false_neg,
        }
    }

    pub fn from_predictions(labels: &[u8], predictions: &[u8]) -> Self {
        assert_eq!(labels.len(), predictions.len());
        let mut counts = [0u64; 4];
        for (&l, &p) in labels.iter().zip(predictions) {
            let slot = match (p, l) {
                (1, 1) => 0,
                (1, 0) => 1,
                (0, 0) => 2,
                _ => 3,
            };
            counts[slot] += 1;
        }
        Metrics::from_counts(counts[0], counts[1], counts[2], counts[3])
    }
}

/// Predicted class: argmax over logits, class 0 on ties.
pub fn predict(params: &MatcherParams, a_idx: &[usize], b_idx: &[usize]) -> u8 {
    let logits = forward_pass(params, a_idx, b_idx).logits;
    u8::from(logits[1] > logits[0])
}

pub fn evaluate_encoded(params: &MatcherParams, examples: &[EncodedExample]) -> Metrics {
    let labels: Vec<u8> = examples.iter().map(|e| e.2).collect();
    let preds: Vec<u8> = examples
        .iter()
        .map(|(a, b, _)| predict(params, a, b))
        .collect();
    Metrics::from_predictions(&labels, &preds)
}

pub fn evaluate(
    params: &MatcherParams,
    corpus: &Corpus,
    vocab: &Vocab,
    tokenizer: &Tokenizer,
) -> Result<Metrics> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let encoded = encode_corpus(corpus, vocab, tokenizer)?;
    Ok(evaluate_encoded(params, &encoded))
}

/// A trained matcher: parameters, the vocabulary they were trained with, and
/// the per-epoch dev metrics history.
#[derive(Debug, Clone)]
pub struct TrainedMatcher {
    pub params: MatcherParams,
    pub vocab: Vocab,
    pub dev_history: Vec<Metrics>,
}

/// Train for a fixed number of epochs: uniform init under the seed, seeded
/// shuffle each epoch, minibatches with a short final batch, one Adam step
/// per batch, no early stopping. Deterministic given the seed.
pub fn train(
    train_corpus: &Corpus,
    dev_corpus: &Corpus,
    cfg: &TrainConfig,
    tokenizer: &Tokenizer,
) -> Result<TrainedMatcher> {
    if train_corpus.is_empty() || dev_corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocab = build_vocab(train_corpus, tokenizer)?;
    let train_ex = encode_corpus(train_corpus, &vocab, tokenizer)?;
    let dev_ex = encode_corpus(dev_corpus, &vocab, tokenizer)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = MatcherParams::init(
        vocab.size(),
        cfg.embed_dim,
        cfg.hidden_dim,
        cfg.init_scale,
        &mut rng,
    );
    let mut state = AdamState::new(&params);
    let mut order: Vec<usize> = (0..train_ex.len()).collect();
    let mut step = 0;
    let mut dev_history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&EncodedExample> = chunk.iter().map(|&i| &train_ex[i]).collect();
            let (_, grads) = loss_and_grads(&params, &batch);
            step += 1;
            adam_step(&mut params, &grads, &mut state, step, cfg);
        }
        dev_history.push(evaluate_encoded(&params, &dev_ex));
    }
    Ok(TrainedMatcher {
        params,
        vocab,
        dev_history,
    })
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"RMT1";

/// Write parameters, vocabulary and language mode as a flat little-endian
/// binary container. Loading restores every float bit-exactly.
pub fn save_checkpoint<P: AsRef<Path>>(
    path: P,
    params: &MatcherParams,
    vocab: &Vocab,
    mode: LanguageMode,
) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&[match mode {
        LanguageMode::English => 0u8,
        LanguageMode::Chinese => 1u8,
    }])?;
    out.write_all(&(vocab.tokens().len() as u64).to_le_bytes())?;
    for token in vocab.tokens() {
        let bytes = token.as_bytes();
        out.write_all(&(bytes.len() as u32).to_le_bytes())?;
        out.write_all(bytes)?;
    }
    let mut write_tensor = |rows: usize, cols: usize, data: &[f64]| -> Result<()> {
        out.write_all(&(rows as u64).to_le_bytes())?;
        out.write_all(&(cols as u64).to_le_bytes())?;
        for v in data {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    };
    write_tensor(params.embed.rows, params.embed.cols, &params.embed.data)?;
    write_tensor(params.w1.rows, params.w1.cols, &params.w1.data)?;
    write_tensor(params.b1.len(), 1, &params.b1)?;
    write_tensor(params.w2.rows, params.w2.cols, &params.w2.data)?;
    write_tensor(params.b2.len(), 1, &params.b2)?;
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<(MatcherParams, Vocab, LanguageMode)> {
    let mut input = BufReader::new(File::open(path)?);
    let bad = |msg: &str| Error::BadCheckpoint(msg.to_string());

    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("unrecognized magic bytes"));
    }
    let mut mode_byte = [0u8; 1];
    input.read_exact(&mut mode_byte)?;
    let mode = match mode_byte[0] {
        0 => LanguageMode::English,
        1 => LanguageMode::Chinese,
        _ => return Err(bad("unknown language mode")),
    };
    let mut u64_buf = [0u8; 8];
    input.read_exact(&mut u64_buf)?;
    let token_count = u64::from_le_bytes(u64_buf) as usize;
    let mut tokens = Vec::with_capacity(token_count);
    for _ in 0..token_count {
        let mut len_buf = [0u8; 4];
        input.read_exact(&mut len_buf)?;
        let mut bytes = vec![0u8; u32::from_le_bytes(len_buf) as usize];
        input.read_exact(&mut bytes)?;
        tokens.push(String::from_utf8(bytes).map_err(|_| bad("token is not UTF-8"))?);
    }
    let vocab = Vocab::from_tokens(tokens);

    let read_tensor = |input: &mut BufReader<File>| -> Result<Mat> {
        let mut buf = [0u8; 8];
        input.read_exact(&mut buf)?;
        let rows = u64::from_le_bytes(buf) as usize;
        input.read_exact(&mut buf)?;
        let cols = u64::from_le_bytes(buf) as usize;
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            input.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        Ok(Mat { rows, cols, data })
    };
    let embed = read_tensor(&mut input)?;
    let w1 = read_tensor(&mut input)?;
    let b1 = read_tensor(&mut input)?;
    let w2 = read_tensor(&mut input)?;
    let b2 = read_tensor(&mut input)?;
    if embed.rows != vocab.size() || w1.rows != 2 * embed.cols || w2.rows != w1.cols
        || b1.rows != w1.cols || b2.rows != 2
    {
        return Err(bad("inconsistent tensor shapes"));
    }
    Ok((
        MatcherParams {
            embed,
            w1,
            b1: b1.data,
            w2,
            b2: b2.data,
        },
        vocab,
        mode,
    ))
}
