//! Test-side oracles, independent of the library code under test.
//!
//! The enumerators below work on plain `(tokens, flags)` pairs and a plain
//! synonym map, and compute the full set of sequences reachable by each edit
//! operation directly from the operation definitions. They deliberately share
//! no code with the engine.

use std::collections::{BTreeSet, HashMap, HashSet};

pub type SynMap = HashMap<String, Vec<String>>;

/// Token sequence state: token strings plus per-token word flags.
pub type State = (Vec<String>, Vec<bool>);

pub fn state_of(tokens: &[&str], flags: &[bool]) -> State {
    assert_eq!(tokens.len(), flags.len());
    (
        tokens.iter().map(|t| t.to_string()).collect(),
        flags.to_vec(),
    )
}

fn eligible(state: &State, lex: &SynMap) -> Vec<usize> {
    (0..state.0.len())
        .filter(|&i| state.1[i] && lex.get(&state.0[i]).map_or(false, |s| !s.is_empty()))
        .collect()
}

/// One synonym-replacement step: every (eligible position, synonym) choice.
fn step_sr(state: &State, lex: &SynMap) -> Vec<State> {
    let elig = eligible(state, lex);
    if elig.is_empty() {
        return vec![state.clone()];
    }
    let mut out = Vec::new();
    for i in elig {
        for syn in &lex[&state.0[i]] {
            let mut next = state.clone();
            next.0[i] = syn.clone();
            out.push(next);
        }
    }
    out
}

/// One random-insertion step: every (eligible word, synonym, gap) choice.
fn step_ri(state: &State, lex: &SynMap) -> Vec<State> {
    let elig = eligible(state, lex);
    if elig.is_empty() {
        return vec![state.clone()];
    }
    let mut out = Vec::new();
    for i in elig {
        for syn in &lex[&state.0[i]] {
            for gap in 0..=state.0.len() {
                let mut next = state.clone();
                next.0.insert(gap, syn.clone());
                next.1.insert(gap, true);
                out.push(next);
            }
        }
    }
    out
}

/// One random-swap step: every unordered pair of distinct indices.
fn step_rs(state: &State) -> Vec<State> {
    let len = state.0.len();
    if len < 2 {
        return vec![state.clone()];
    }
    let mut out = Vec::new();
    for i in 0..len {
        for j in (i + 1)..len {
            let mut next = state.clone();
            next.0.swap(i, j);
            next.1.swap(i, j);
            out.push(next);
        }
    }
    out
}

fn apply_steps(start: &State, n: usize, step: impl Fn(&State) -> Vec<State>) -> HashSet<State> {
    let mut frontier: HashSet<State> = HashSet::new();
    frontier.insert(start.clone());
    for _ in 0..n {
        let mut next = HashSet::new();
        for s in &frontier {
            for r in step(s) {
                next.insert(r);
            }
        }
        frontier = next;
    }
    frontier
}

/// All subsets of `k` indices out of `0..len`, for the one-shot deletion op.
fn index_subsets(len: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, len: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..len {
            cur.push(i);
            rec(i + 1, len, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, len, k, &mut Vec::new(), &mut out);
    out
}

fn rd_states(state: &State, n: usize) -> HashSet<State> {
    let len = state.0.len();
    let k = n.min(len.saturating_sub(1));
    let mut out = HashSet::new();
    for subset in index_subsets(len, k) {
        let drop: HashSet<usize> = subset.into_iter().collect();
        let tokens: Vec<String> = state
            .0
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, t)| t.clone())
            .collect();
        let flags: Vec<bool> = state
            .1
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, f)| *f)
            .collect();
        out.insert((tokens, flags));
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum OracleOp {
    Sr,
    Ri,
    Rs,
    Rd,
}

pub const ORACLE_OPS: [OracleOp; 4] = [OracleOp::Sr, OracleOp::Ri, OracleOp::Rs, OracleOp::Rd];

fn apply_op_states(start: &State, op: OracleOp, n: usize, lex: &SynMap) -> HashSet<State> {
    match op {
        OracleOp::Sr => apply_steps(start, n, |s| step_sr(s, lex)),
        OracleOp::Ri => apply_steps(start, n, |s| step_ri(s, lex)),
        OracleOp::Rs => apply_steps(start, n, step_rs),
        OracleOp::Rd => rd_states(start, n),
    }
}

/// Set of token sequences reachable by `n` applications of one operation.
pub fn reachable(start: &State, op: OracleOp, n: usize, lex: &SynMap) -> BTreeSet<Vec<String>> {
    apply_op_states(start, op, n, lex)
        .into_iter()
        .map(|(t, _)| t)
        .collect()
}

fn arrangements(k: usize) -> Vec<Vec<OracleOp>> {
    fn rec(k: usize, cur: &mut Vec<OracleOp>, out: &mut Vec<Vec<OracleOp>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for op in ORACLE_OPS {
            if !cur.contains(&op) {
                cur.push(op);
                rec(k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(k, &mut Vec::new(), &mut out);
    out
}

/// Set of token sequences reachable by the mix operation: any `k` in
/// `[k_min, k_max]` distinct operations applied in any order, each with
/// `edits_per_op` edits.
pub fn reachable_mix(
    start: &State,
    k_min: usize,
    k_max: usize,
    edits_per_op: usize,
    lex: &SynMap,
) -> BTreeSet<Vec<String>> {
    let mut result = BTreeSet::new();
    for k in k_min..=k_max.min(4) {
        for order in arrangements(k) {
            let mut states: HashSet<State> = HashSet::new();
            states.insert(start.clone());
            for op in order {
                let mut next = HashSet::new();
                for s in &states {
                    next.extend(apply_op_states(s, op, edits_per_op, lex));
                }
                states = next;
            }
            result.extend(states.into_iter().map(|(t, _)| t));
        }
    }
    result
}

/// Exact rational round-half-to-even of `rate * len`, with the rate quantized
/// to ten-thousandths. Written against `num`'s rational type so it shares no
/// arithmetic with the integer path under test.
pub fn rounding_oracle(rate: f64, len: usize) -> usize {
    use num::rational::Ratio;
    let tenk = (rate * 10_000.0).round() as i64;
    let product = Ratio::new(tenk, 10_000) * Ratio::from_integer(len as i64);
    let floor = product.floor().to_integer();
    let frac = product - Ratio::from_integer(floor);
    let half = Ratio::new(1, 2);
    let rounded = match frac.cmp(&half) {
        std::cmp::Ordering::Less => floor,
        std::cmp::Ordering::Greater => floor + 1,
        std::cmp::Ordering::Equal => {
            if floor % 2 == 0 {
                floor
            } else {
                floor + 1
            }
        }
    };
    rounded as usize
}

/// Brute-force confusion counting for the metrics oracle.
pub fn confusion(labels: &[u8], preds: &[u8]) -> (u64, u64, u64, u64) {
    let mut tp = 0;
    let mut fp = 0;
    let mut tn = 0;
    let mut fneg = 0;
    for (&l, &p) in labels.iter().zip(preds) {
        match (p, l) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fneg += 1,
            _ => unreachable!("labels and predictions are binary"),
        }
    }
    (tp, fp, tn, fneg)
}
