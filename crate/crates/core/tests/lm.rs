use std::sync::Arc;

use cslab::lm::{
    grid_weight, interpolate, optimize_weight, parse_arpa, perplexity, train_ngram, write_arpa,
    BoundaryMode, NGramLM, Vocabulary, BOS, EOS, WEIGHT_GRID_STEPS,
};
use proptest::prelude::*;

type Text = Vec<Vec<String>>;

fn corpus(max_vocab: usize) -> impl Strategy<Value = (usize, Text)> {
    (1..=max_vocab).prop_flat_map(|v| {
        let word = (0..v).prop_map(|i| format!("w{i}"));
        let sentence = prop::collection::vec(word, 1..6);
        (Just(v), prop::collection::vec(sentence, 1..=5))
    })
}

fn vocab(v: usize) -> Arc<Vocabulary> {
    Arc::new(Vocabulary::from_words((0..v).map(|i| format!("w{i}"))).unwrap())
}

fn boundary(sentence: bool) -> BoundaryMode {
    if sentence {
        BoundaryMode::Sentence
    } else {
        BoundaryMode::NoBoundary
    }
}

/// Every history of `len` symbols the model can be asked about.
fn contexts(lm: &NGramLM, len: usize) -> Vec<Vec<String>> {
    let mut symbols: Vec<String> = lm.vocab().words().map(String::from).collect();
    symbols.push(BOS.to_string());
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|c| {
                symbols.iter().map(move |s| {
                    let mut n = c.clone();
                    n.push(s.clone());
                    n
                })
            })
            .collect();
    }
    out
}

fn events(lm: &NGramLM) -> Vec<String> {
    let mut e: Vec<String> = lm.vocab().words().map(String::from).collect();
    if lm.boundary() == BoundaryMode::Sentence {
        e.push(EOS.to_string());
    }
    e
}

/// Perplexity from per-token `prob` calls with explicit histories.
fn direct_perplexity(lm: &NGramLM, text: &Text) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for s in text {
        let mut history = vec![BOS.to_string()];
        let mut targets = s.clone();
        if lm.boundary() == BoundaryMode::Sentence {
            targets.push(EOS.to_string());
        }
        for w in targets {
            let keep = history.len().min(lm.order() - 1);
            let ctx: Vec<&str> = history[history.len() - keep..]
                .iter()
                .map(String::as_str)
                .collect();
            sum += lm.prob(&ctx, &w).unwrap().ln();
            n += 1;
            history.push(w);
        }
    }
    (-sum / n as f64).exp()
}

proptest! {
    #[test]
    fn conditionals_sum_to_one((v, text) in corpus(5), order in 1usize..=3, sentence: bool) {
        let lm = train_ngram(&text, vocab(v), order, boundary(sentence)).unwrap();
        for ctx in contexts(&lm, order - 1) {
            let total: f64 = events(&lm).iter().map(|w| lm.prob(&ctx, w).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "context {:?} sums to {}", ctx, total);
        }
    }

    #[test]
    fn perplexity_matches_direct_summation((_, text) in corpus(6), (_, eval) in corpus(6), order in 1usize..=3, sentence: bool) {
        let lm = train_ngram(&text, vocab(6), order, boundary(sentence)).unwrap();
        let got = perplexity(&lm, &eval).unwrap();
        let want = direct_perplexity(&lm, &eval);
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn arpa_round_trip_keeps_probabilities((v, text) in corpus(5), order in 1usize..=3, sentence: bool) {
        let lm = train_ngram(&text, vocab(v), order, boundary(sentence)).unwrap();
        let back = parse_arpa(&write_arpa(&lm)).unwrap();
        prop_assert_eq!(back.order(), lm.order());
        prop_assert_eq!(back.boundary(), lm.boundary());
        // Six decimals of log10 per stored number; a backoff chain multiplies
        // at most five of them.
        let tol = 5.0 * 0.5e-6 * std::f64::consts::LN_10 + 1e-12;
        for ctx in contexts(&lm, order - 1) {
            for w in events(&lm) {
                let (a, b) = (lm.prob(&ctx, &w).unwrap(), back.prob(&ctx, &w).unwrap());
                prop_assert!((a.ln() - b.ln()).abs() <= tol, "P({} | {:?}): {} vs {}", w, ctx, a, b);
            }
        }
    }

    #[test]
    fn tuned_weight_is_grid_argmin((_, t1) in corpus(5), (_, t2) in corpus(5), (_, dev) in corpus(5)) {
        let v = vocab(5);
        let l1 = train_ngram(&t1, v.clone(), 3, BoundaryMode::Sentence).unwrap();
        let l2 = train_ngram(&t2, v, 3, BoundaryMode::Sentence).unwrap();
        let choice = optimize_weight(&l1, &l2, &dev).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=WEIGHT_GRID_STEPS {
            let lambda = grid_weight(i);
            let ppl = perplexity(&interpolate(&l1, &l2, lambda).unwrap(), &dev).unwrap();
            if ppl < best.0 {
                best = (ppl, lambda);
            }
        }
        prop_assert_eq!(choice.lambda, best.1);
        let ends = perplexity(&l1, &dev).unwrap().min(perplexity(&l2, &dev).unwrap());
        prop_assert!(choice.dev_ppl <= ends);
    }
}

#[test]
fn equal_counts_give_vocabulary_size_perplexity() {
    for v in 1..=8 {
        let words: Vec<String> = (0..v).map(|i| format!("w{i}")).collect();
        let text = vec![words];
        let lm = train_ngram(&text, vocab(v), 1, BoundaryMode::NoBoundary).unwrap();
        let ppl = perplexity(&lm, &text).unwrap();
        assert!((ppl - v as f64).abs() < 1e-9, "{v}: {ppl}");
    }
}
