use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::lm::{BoundaryMode, NGramLM};

/// One lattice column per observed symbol: candidate word ids with their
/// log emission scores. Ids index the language model vocabulary.
pub type Lattice = Vec<Vec<(u32, f64)>>;

/// Exact Viterbi search under a model of order up to 3.
///
/// A path scores `Σ (log emission + log P(w_i | w_{i-2}, w_{i-1}))`, plus
/// `log P(</s> | ...)` in sentence mode, summed left to right. Among paths
/// with equal score the lexicographically smallest id sequence wins.
pub fn viterbi(lm: &NGramLM, lattice: &Lattice) -> Result<(Vec<u32>, f64)> {
    if lattice.is_empty() || lattice.iter().any(Vec::is_empty) {
        return Err(Error::Empty("lattice column"));
    }
    let vocab = lm.vocab();
    if let Some(&(bad, _)) = lattice
        .iter()
        .flatten()
        .find(|(w, _)| (*w as usize) >= vocab.len())
    {
        return Err(Error::InvalidParameter(format!(
            "candidate id {bad} outside vocabulary"
        )));
    }
    let bos = vocab.len() as u32;
    let word_at = |i: isize, k: usize| -> u32 {
        if i < 0 {
            bos
        } else {
            lattice[i as usize][k].0
        }
    };

    // Column i holds states (p, q): q indexes column i, p indexes column
    // i-1 (a single `<s>` state before the first column).
    let width = |i: isize| if i < 0 { 1 } else { lattice[i as usize].len() };
    let mut scores: Vec<Vec<f64>> = Vec::with_capacity(lattice.len());
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(lattice.len());

    let first = &lattice[0];
    let mut s0 = Vec::with_capacity(first.len());
    for &(w, e) in first {
        s0.push(0.0 + e + lm.prob_ids(&[bos], w).ln());
    }
    scores.push(s0);
    back.push(vec![0; first.len()]);

    for i in 1..lattice.len() {
        let (pw, qw) = (width(i as isize - 2), width(i as isize - 1));
        let col = &lattice[i];
        let mut s = vec![f64::NEG_INFINITY; qw * col.len()];
        let mut b = vec![usize::MAX; qw * col.len()];
        for q in 0..qw {
            let wq = word_at(i as isize - 1, q);
            for (r, &(wr, e)) in col.iter().enumerate() {
                let slot = q * col.len() + r;
                for p in 0..pw {
                    let prev = scores[i - 1][p * qw + q];
                    let wp = word_at(i as isize - 2, p);
                    let cand = prev + e + lm.prob_ids(&[wp, wq], wr).ln();
                    let better = match cand.partial_cmp(&s[slot]) {
                        Some(Ordering::Greater) => true,
                        Some(Ordering::Equal) if b[slot] != usize::MAX => {
                            compare_prefix(lattice, &back, i - 1, p * qw + q, b[slot] * qw + q)
                                == Ordering::Less
                        }
                        _ => b[slot] == usize::MAX,
                    };
                    if better {
                        s[slot] = cand;
                        b[slot] = p;
                    }
                }
            }
        }
        scores.push(s);
        back.push(b);
    }

    let last = lattice.len() - 1;
    let (pw, qw) = (width(last as isize - 1), width(last as isize));
    let mut best: Option<(usize, f64)> = None;
    for p in 0..pw {
        for q in 0..qw {
            let state = p * qw + q;
            let mut total = scores[last][state];
            if lm.boundary() == BoundaryMode::Sentence {
                let ctx = [word_at(last as isize - 1, p), word_at(last as isize, q)];
                total += lm.prob_ids(&ctx, vocab.len() as u32 + 1).ln();
            }
            let better = match best {
                None => true,
                Some((bs, bt)) => match total.partial_cmp(&bt) {
                    Some(Ordering::Greater) => true,
                    Some(Ordering::Equal) => {
                        compare_prefix(lattice, &back, last, state, bs) == Ordering::Less
                    }
                    _ => false,
                },
            };
            if better {
                best = Some((state, total));
            }
        }
    }
    let (state, total) = best.expect("lattice has states");
    Ok((path_to(lattice, &back, last, state), total))
}

/// Candidate indices per column of the best prefix ending in `state`.
fn state_path(lattice: &Lattice, back: &[Vec<usize>], i: usize, mut state: usize) -> Vec<usize> {
    let mut out = vec![0; i + 1];
    let mut i = i as isize;
    while i >= 0 {
        let w = lattice[i as usize].len();
        let (p, q) = (state / w, state % w);
        out[i as usize] = q;
        if i >= 1 {
            let pred_q = p;
            let pred_p = back[i as usize][state];
            let pw = lattice[i as usize - 1].len();
            state = pred_p * pw + pred_q;
        }
        i -= 1;
    }
    out
}

fn path_to(lattice: &Lattice, back: &[Vec<usize>], i: usize, state: usize) -> Vec<u32> {
    state_path(lattice, back, i, state)
        .into_iter()
        .enumerate()
        .map(|(col, k)| lattice[col][k].0)
        .collect()
}

fn compare_prefix(
    lattice: &Lattice,
    back: &[Vec<usize>],
    i: usize,
    a: usize,
    b: usize,
) -> Ordering {
    path_to(lattice, back, i, a).cmp(&path_to(lattice, back, i, b))
}
