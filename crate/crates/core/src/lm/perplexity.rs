use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{BoundaryMode, NGramLM};
use super::vocab::Word;
use crate::corpus::{Corpus, Language};
use crate::error::{Error, Result};

/// Natural-log probabilities of every scored event of one sentence: each
/// word in order, then `</s>` in sentence mode. `<s>` is context only.
pub fn sentence_log_probs<W: Word>(lm: &NGramLM, words: &[W], sentence: usize) -> Result<Vec<f64>> {
    let ids = lm.sentence_ids(words, sentence)?;
    Ok(log_probs_ids(lm, &ids))
}

pub(crate) fn log_probs_ids(lm: &NGramLM, ids: &[u32]) -> Vec<f64> {
    event_probs_ids(lm, ids).into_iter().map(f64::ln).collect()
}

pub(crate) fn event_probs_ids(lm: &NGramLM, ids: &[u32]) -> Vec<f64> {
    let mut ctx = vec![lm.vocab.bos()];
    let mut out = Vec::with_capacity(ids.len() + 1);
    for &w in ids {
        out.push(lm.prob_ids(&ctx, w));
        ctx.push(w);
    }
    if lm.boundary == BoundaryMode::Sentence {
        out.push(lm.prob_ids(&ctx, lm.vocab.eos()));
    }
    out
}

pub(crate) fn ppl_from(sum_log: f64, n: usize) -> f64 {
    (-sum_log / n as f64).exp()
}

/// `exp(-mean ln p)` over all scored events of `text`.
pub fn perplexity<W: Word>(lm: &NGramLM, text: &[Vec<W>]) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (i, s) in text.iter().enumerate() {
        for lp in sentence_log_probs(lm, s, i)? {
            sum += lp;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Empty("no scored events"));
    }
    Ok(ppl_from(sum, n))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryCounts {
    /// Every scored event including `</s>`.
    pub events: u64,
    pub words: u64,
    pub cpp_all: u64,
    pub cpp_eb: u64,
    pub cpp_be: u64,
    pub cpp_bantu_bantu: u64,
    pub mpp_all: u64,
    pub mpp: BTreeMap<Language, u64>,
}

/// Perplexity split at code-switch points. A word whose predecessor carries
/// a different language tag is a switch word (CPP); every other word is a
/// monolingual-context word (MPP) bucketed by its own tag. `</s>` only
/// enters `overall`. Categories without words are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub overall: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cpp_all: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cpp_eb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cpp_be: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mpp_all: Option<f64>,
    pub mpp: BTreeMap<Language, f64>,
    pub counts: CategoryCounts,
}

#[derive(Default)]
struct Acc {
    sum: f64,
    n: u64,
}

impl Acc {
    fn add(&mut self, lp: f64) {
        self.sum += lp;
        self.n += 1;
    }

    fn ppl(&self) -> Option<f64> {
        (self.n > 0).then(|| ppl_from(self.sum, self.n as usize))
    }
}

pub fn decomposed_perplexity(lm: &NGramLM, corpus: &Corpus) -> Result<PerplexityReport> {
    let mut overall = Acc::default();
    let mut words = 0u64;
    let (mut cpp_all, mut cpp_eb, mut cpp_be) = (Acc::default(), Acc::default(), Acc::default());
    let mut bantu_bantu = 0u64;
    let mut mpp_all = Acc::default();
    let mut mpp: BTreeMap<Language, Acc> = BTreeMap::new();

    for (i, u) in corpus.iter().enumerate() {
        if !u.is_transcribed() {
            return Err(Error::Untranscribed(u.id().to_string()));
        }
        let tokens = u.tokens();
        let lps = sentence_log_probs(lm, tokens, i)?;
        for (j, &lp) in lps.iter().enumerate() {
            overall.add(lp);
            let Some(tok) = tokens.get(j) else {
                continue;
            };
            words += 1;
            let lang = tok.lang();
            match j.checked_sub(1).map(|p| tokens[p].lang()) {
                Some(prev) if prev != lang => {
                    cpp_all.add(lp);
                    match (prev, lang) {
                        (Language::English, _) => cpp_eb.add(lp),
                        (_, Language::English) => cpp_be.add(lp),
                        _ => bantu_bantu += 1,
                    }
                }
                _ => {
                    mpp_all.add(lp);
                    mpp.entry(lang).or_default().add(lp);
                }
            }
        }
    }
    let overall_ppl = overall.ppl().ok_or(Error::Empty("no scored events"))?;
    Ok(PerplexityReport {
        overall: overall_ppl,
        cpp_all: cpp_all.ppl(),
        cpp_eb: cpp_eb.ppl(),
        cpp_be: cpp_be.ppl(),
        mpp_all: mpp_all.ppl(),
        mpp: mpp
            .iter()
            .filter_map(|(l, a)| a.ppl().map(|p| (*l, p)))
            .collect(),
        counts: CategoryCounts {
            events: overall.n,
            words,
            cpp_all: cpp_all.n,
            cpp_eb: cpp_eb.n,
            cpp_be: cpp_be.n,
            cpp_bantu_bantu: bantu_bantu,
            mpp_all: mpp_all.n,
            mpp: mpp.iter().map(|(l, a)| (*l, a.n)).collect(),
        },
    })
}

impl PerplexityReport {
    pub fn render_table(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |p| format!("{p:.1}"));
        let mut head = vec!["PPL", "all CPP", "CPP_EB", "CPP_BE", "all MPP"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        let mut row = vec![
            fmt(Some(self.overall)),
            fmt(self.cpp_all),
            fmt(self.cpp_eb),
            fmt(self.cpp_be),
            fmt(self.mpp_all),
        ];
        for (l, p) in &self.mpp {
            head.push(format!("MPP_{l}"));
            row.push(fmt(Some(*p)));
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .map(|c| format!("{c:>10}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!("{}\n{}\n", line(&head), line(&row))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::corpus::{parse_tokens, BatchId, Utterance};
    use crate::lm::model::train_ngram;
    use crate::lm::vocab::Vocabulary;

    fn corpus(lines: &[&str]) -> Corpus {
        Corpus::new(
            lines
                .iter()
                .enumerate()
                .map(|(i, l)| {
                    Utterance::manual(
                        format!("u{i}"),
                        "s",
                        BatchId::from("test"),
                        1.0,
                        parse_tokens(l).unwrap(),
                    )
                    .unwrap()
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_model_has_unit_perplexity_without_boundaries() {
        let v = Arc::new(Vocabulary::from_words(["a"]).unwrap());
        let lm = train_ngram(&[vec!["a", "a", "a"]], v, 3, BoundaryMode::NoBoundary).unwrap();
        assert_eq!(perplexity(&lm, &[vec!["a", "a", "a"]]).unwrap(), 1.0);
        assert_eq!(perplexity(&lm, &[vec!["a", "a"]]).unwrap(), 1.0);
    }

    #[test]
    fn sentence_mode_scores_end_of_sentence() {
        // Training `<s> a a a </s>`:
        // unigram a3 </s>1, N=4, T=2, uniform 1/2 -> P(a)=4/6, P(</s>)=2/6.
        // Context <s>: a1 -> P(a|<s>) = (1 + 4/6)/2 = 5/6.
        // Context a: a2 </s>1 -> P(a|a) = (2 + 2*4/6)/5 = 2/3, P(</s>|a) = 1/3.
        // Context (<s>,a): a1 -> P(a|<s> a) = (1 + 2/3)/2 = 5/6.
        // Context (a,a): a1 </s>1 -> P(</s>|a a) = (1 + 2/3)/4 = 5/12.
        // Scoring `a a`: P(a|<s>) P(a|<s> a) P(</s>|a a) over 3 events.
        let v = Arc::new(Vocabulary::from_words(["a"]).unwrap());
        let lm = train_ngram(&[vec!["a", "a", "a"]], v, 3, BoundaryMode::Sentence).unwrap();
        let expected: f64 = (5.0f64 / 6.0 * 5.0 / 6.0 * 5.0 / 12.0).powf(-1.0 / 3.0);
        let got = perplexity(&lm, &[vec!["a", "a"]]).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn uniform_unigram_perplexity_is_vocab_size() {
        let words = ["a", "b", "c", "d", "e"];
        let v = Arc::new(Vocabulary::from_words(words).unwrap());
        let lm = train_ngram(&[words.to_vec()], v, 1, BoundaryMode::NoBoundary).unwrap();
        let ppl = perplexity(&lm, &[vec!["a", "a", "c"], vec!["e"]]).unwrap();
        assert!((ppl - 5.0).abs() < 1e-9);
    }

    #[test]
    fn monolingual_corpus_has_no_switch_categories() {
        let c = corpus(&["a_E b_E", "b_E"]);
        let v = Arc::new(Vocabulary::from_tagged(c.iter().flat_map(|u| u.tokens())));
        let lm = train_ngram(&c.sentences(), v, 2, BoundaryMode::Sentence).unwrap();
        let r = decomposed_perplexity(&lm, &c).unwrap();
        assert!(r.cpp_all.is_none() && r.cpp_eb.is_none() && r.cpp_be.is_none());
        let words: Vec<f64> = c
            .iter()
            .enumerate()
            .flat_map(|(i, u)| {
                let lps = sentence_log_probs(&lm, u.tokens(), i).unwrap();
                lps[..u.tokens().len()].to_vec()
            })
            .collect();
        let expected = ppl_from(words.iter().sum(), words.len());
        assert!((r.mpp_all.unwrap() - expected).abs() < 1e-12);
        assert_eq!(r.counts.mpp_all, 3);
    }

    #[test]
    fn switch_words_are_separated_by_direction() {
        let c = corpus(&["a_E x_Z a_E"]);
        let v = Arc::new(Vocabulary::from_tagged(c.iter().flat_map(|u| u.tokens())));
        let lm = train_ngram(
            &[vec!["a", "a", "x"], vec!["x"]],
            v,
            3,
            BoundaryMode::Sentence,
        )
        .unwrap();
        let r = decomposed_perplexity(&lm, &c).unwrap();
        let p_x = lm.prob(&["<s>", "a"], "x").unwrap();
        let p_a = lm.prob(&["a", "x"], "a").unwrap();
        let p_first = lm.prob(&["<s>"], "a").unwrap();
        assert!((r.cpp_eb.unwrap() - 1.0 / p_x).abs() < 1e-9);
        assert!((r.cpp_be.unwrap() - 1.0 / p_a).abs() < 1e-9);
        assert!((r.cpp_all.unwrap() - (p_x * p_a).powf(-0.5)).abs() < 1e-9);
        assert!((r.mpp[&Language::English] - 1.0 / p_first).abs() < 1e-9);
        assert_eq!(r.counts.cpp_all + r.counts.mpp_all, r.counts.words);
        assert_eq!(r.counts.events, 4);
    }

    #[test]
    fn untranscribed_and_oov_are_errors() {
        let v = Arc::new(Vocabulary::from_words(["a"]).unwrap());
        let lm = train_ngram(&[vec!["a"]], v, 2, BoundaryMode::Sentence).unwrap();
        assert!(matches!(
            perplexity(&lm, &[vec!["a"], vec!["zz"]]),
            Err(Error::OutOfVocabulary { sentence: 1, .. })
        ));
        let c = Corpus::new(vec![Utterance::untranscribed(
            "u",
            "s",
            BatchId::from("B2"),
            1.0,
        )
        .unwrap()])
        .unwrap();
        assert!(matches!(
            decomposed_perplexity(&lm, &c),
            Err(Error::Untranscribed(_))
        ));
    }
}
