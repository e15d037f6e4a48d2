use std::sync::Arc;

use cslab::corpus::{parse_corpus, parse_language_set};
use cslab::lm::{train_ngram, BoundaryMode, NGramLM, Vocabulary, BOS, EOS};
use cslab::recognizer::{train_recognizer, viterbi, ChannelModel, Lattice, RecognizerParams};
use proptest::prelude::*;

/// Best path by scoring every path left to right.
fn enumerate(lm: &NGramLM, lattice: &Lattice) -> (Vec<u32>, f64) {
    let mut best: Option<(Vec<u32>, f64)> = None;
    let mut idx = vec![0usize; lattice.len()];
    loop {
        let path: Vec<u32> = idx
            .iter()
            .enumerate()
            .map(|(i, &k)| lattice[i][k].0)
            .collect();
        let mut history: Vec<&str> = vec![BOS];
        let mut score = 0.0;
        for (i, &k) in idx.iter().enumerate() {
            let w = lm.vocab().word(lattice[i][k].0);
            let keep = history.len().min(lm.order() - 1);
            let ctx = &history[history.len() - keep..];
            score = score + lattice[i][k].1 + lm.prob(ctx, w).unwrap().ln();
            history.push(w);
        }
        if lm.boundary() == BoundaryMode::Sentence {
            let keep = history.len().min(lm.order() - 1);
            score += lm.prob(&history[history.len() - keep..], EOS).unwrap().ln();
        }
        let better = match &best {
            None => true,
            Some((bp, bs)) => score > *bs || (score == *bs && path < *bp),
        };
        if better {
            best = Some((path, score));
        }
        let mut i = 0;
        loop {
            if i == idx.len() {
                return best.unwrap();
            }
            idx[i] += 1;
            if idx[i] < lattice[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn case() -> impl Strategy<Value = (Vec<Vec<u32>>, usize, bool, Lattice)> {
    let text = prop::collection::vec(prop::collection::vec(0..5u32, 1..6), 1..6);
    let column = prop::collection::btree_map(0..5u32, -4.0..0.0f64, 1..=3)
        .prop_map(|m| m.into_iter().collect::<Vec<_>>());
    let lattice = prop::collection::vec(column, 1..=4);
    (text, 1..=3usize, any::<bool>(), lattice)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn viterbi_equals_path_enumeration((text, order, sentence, lattice) in case()) {
        let words: Vec<String> = (0..5).map(|i| format!("w{i}")).collect();
        let vocab = Arc::new(Vocabulary::from_words(&words).unwrap());
        let text: Vec<Vec<String>> = text
            .iter()
            .map(|s| s.iter().map(|&i| words[i as usize].clone()).collect())
            .collect();
        let boundary = if sentence { BoundaryMode::Sentence } else { BoundaryMode::NoBoundary };
        let lm = train_ngram(&text, vocab, order, boundary).unwrap();
        let got = viterbi(&lm, &lattice).unwrap();
        prop_assert_eq!(got, enumerate(&lm, &lattice));
    }
}

#[test]
fn near_perfect_channel_returns_the_observation() {
    let pool = parse_corpus(
        "u1\ts\tManT\t1\thello_E sawubona_Z\n\
         u2\ts\tManT\t1\tsawubona_Z baba_Z hello_E\n\
         u3\ts\tManT\t1\tbaba_Z\n",
    )
    .unwrap();
    let params = RecognizerParams {
        channel: ChannelModel::with_p_correct(0.999),
        reestimate_channel: false,
        ..Default::default()
    };
    let r = train_recognizer(&pool, &parse_language_set("EZ").unwrap(), &params).unwrap();
    let out = r.decode_symbols(&["baba", "hello", "sawubona"]).unwrap();
    let surfaces: Vec<&str> = out.hypothesis.iter().map(|t| t.surface()).collect();
    assert_eq!(surfaces, ["baba", "hello", "sawubona"]);
}
