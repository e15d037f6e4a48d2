use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, Word, BOS, EOS};
use crate::error::{Error, Result};

/// Whether sentences end in a scored `</s>` event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    /// `<s>` is context only and `</s>` is predicted after every sentence.
    Sentence,
    /// No end-of-sentence event: the model distributes mass over words only.
    NoBoundary,
}

pub const WITTEN_BELL: &str = "witten-bell";

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Entry {
    pub prob: f64,
    /// Backoff weight when this n-gram is also a context.
    pub bow: Option<f64>,
}

/// Backoff tables: explicit probabilities for listed n-grams and backoff
/// weights for contexts. Probabilities of unlisted events follow from
/// `bow(context) * P(word | shorter context)`.
#[derive(Clone, Debug)]
pub(crate) struct Backoff {
    pub unigrams: Vec<Entry>,
    pub bigrams: HashMap<(u32, u32), Entry>,
    pub trigrams: HashMap<(u32, u32, u32), f64>,
}

impl Backoff {
    fn prob(&self, ctx: &[u32], w: u32) -> f64 {
        match *ctx {
            [u, v] => {
                if let Some(p) = self.trigrams.get(&(u, v, w)) {
                    return *p;
                }
                let bow = self.bigrams.get(&(u, v)).and_then(|e| e.bow).unwrap_or(1.0);
                bow * self.prob(&[v], w)
            }
            [v] => {
                if let Some(e) = self.bigrams.get(&(v, w)) {
                    return e.prob;
                }
                let bow = self.unigrams[v as usize].bow.unwrap_or(1.0);
                bow * self.prob(&[], w)
            }
            _ => self.unigrams[w as usize].prob,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Model {
    Backoff(Backoff),
    /// `weight * first + (1 - weight) * second`.
    Mixture {
        first: Box<NGramLM>,
        second: Box<NGramLM>,
        weight: f64,
    },
}

/// Closed-vocabulary n-gram language model of order 1 to 3.
#[derive(Clone, Debug)]
pub struct NGramLM {
    pub(crate) vocab: Arc<Vocabulary>,
    pub(crate) order: usize,
    pub(crate) boundary: BoundaryMode,
    pub(crate) smoothing: String,
    pub(crate) model: Model,
}

/// `weight * p1 + (1 - weight) * p2`, written so that equal inputs and the
/// endpoint weights reproduce their operands exactly.
#[inline]
pub(crate) fn mix(weight: f64, p1: f64, p2: f64) -> f64 {
    if weight == 1.0 {
        p1
    } else {
        p2 + weight * (p1 - p2)
    }
}

impl NGramLM {
    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn boundary(&self) -> BoundaryMode {
        self.boundary
    }

    pub fn smoothing(&self) -> &str {
        &self.smoothing
    }

    pub fn is_mixture(&self) -> bool {
        matches!(self.model, Model::Mixture { .. })
    }

    /// Ids of every predictable event: all words, then `</s>` in sentence mode.
    pub(crate) fn event_ids(&self) -> impl Iterator<Item = u32> {
        let n = self.vocab.len() as u32;
        let eos = (self.boundary == BoundaryMode::Sentence).then_some(self.vocab.eos());
        (0..n).chain(eos)
    }

    /// Conditional probability over ids; `ctx` holds the most recent words
    /// last and may be longer than the model order.
    pub(crate) fn prob_ids(&self, ctx: &[u32], w: u32) -> f64 {
        let keep = ctx.len().min(self.order - 1);
        let ctx = &ctx[ctx.len() - keep..];
        match &self.model {
            Model::Backoff(b) => b.prob(ctx, w),
            Model::Mixture {
                first,
                second,
                weight,
            } => mix(*weight, first.prob_ids(ctx, w), second.prob_ids(ctx, w)),
        }
    }

    /// Smoothed `P(word | context)`. Context words are given oldest first
    /// and may include `<s>`; `word` may be `</s>` in sentence mode.
    pub fn prob<W: Word>(&self, context: &[W], word: &str) -> Result<f64> {
        let oov = |t: &str| Error::OutOfVocabulary {
            token: t.to_string(),
            sentence: 0,
        };
        let mut ids = Vec::with_capacity(context.len());
        for c in context {
            let s = c.surface();
            if s == EOS {
                return Err(Error::InvalidParameter("`</s>` cannot be context".into()));
            }
            ids.push(self.vocab.symbol_id(s).ok_or_else(|| oov(s))?);
        }
        let w = match word {
            BOS => return Err(Error::InvalidParameter("`<s>` is never predicted".into())),
            EOS if self.boundary == BoundaryMode::NoBoundary => {
                return Err(Error::InvalidParameter(
                    "`</s>` is not an event of a no-boundary model".into(),
                ))
            }
            w => self.vocab.symbol_id(w).ok_or_else(|| oov(w))?,
        };
        Ok(self.prob_ids(&ids, w))
    }

    /// Maps a sentence to word ids, reporting OOV tokens with `sentence`.
    pub(crate) fn sentence_ids<W: Word>(&self, words: &[W], sentence: usize) -> Result<Vec<u32>> {
        words
            .iter()
            .map(|w| {
                self.vocab
                    .id(w.surface())
                    .ok_or_else(|| Error::OutOfVocabulary {
                        token: w.surface().to_string(),
                        sentence,
                    })
            })
            .collect()
    }

    /// Unigram model from explicit probabilities for every event.
    pub fn from_unigram_probs(
        vocab: Arc<Vocabulary>,
        probs: &[(&str, f64)],
        boundary: BoundaryMode,
    ) -> Result<Self> {
        let mut unigrams = vec![
            Entry {
                prob: f64::NAN,
                bow: None
            };
            vocab.len() + 2
        ];
        unigrams[vocab.bos() as usize].prob = 0.0;
        if boundary == BoundaryMode::NoBoundary {
            unigrams[vocab.eos() as usize].prob = 0.0;
        }
        for (w, p) in probs {
            let id = vocab.symbol_id(w).ok_or_else(|| Error::OutOfVocabulary {
                token: w.to_string(),
                sentence: 0,
            })?;
            if !(*p > 0.0 && *p <= 1.0) || id == vocab.bos() {
                return Err(Error::InvalidParameter(format!(
                    "bad probability for `{w}`"
                )));
            }
            unigrams[id as usize].prob = *p;
        }
        if unigrams.iter().any(|e| e.prob.is_nan()) {
            return Err(Error::InvalidParameter(
                "every event needs a probability".into(),
            ));
        }
        let total: f64 = unigrams.iter().map(|e| e.prob).sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(NGramLM {
            vocab,
            order: 1,
            boundary,
            smoothing: "explicit".into(),
            model: Model::Backoff(Backoff {
                unigrams,
                bigrams: HashMap::new(),
                trigrams: HashMap::new(),
            }),
        })
    }
}

/// Trains an interpolated Witten-Bell model.
///
/// For a context `h` with `c(h)` observed continuations of `t(h)` distinct
/// types, `P(w|h) = (c(h,w) + t(h) P(w|h')) / (c(h) + t(h))`, bottoming out
/// in a uniform distribution over all events. Unseen contexts back off
/// directly to the shorter context.
pub fn train_ngram<W: Word>(
    sentences: &[Vec<W>],
    vocab: Arc<Vocabulary>,
    order: usize,
    boundary: BoundaryMode,
) -> Result<NGramLM> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidParameter(format!(
            "order {order} not in 1..=3"
        )));
    }
    if sentences.is_empty() {
        return Err(Error::Empty("training corpus"));
    }
    let bos = vocab.bos();
    let eos = vocab.eos();
    let n_events = vocab.len() + usize::from(boundary == BoundaryMode::Sentence);

    let mut c1 = vec![0u64; vocab.len() + 2];
    let mut c2: HashMap<(u32, u32), u64> = HashMap::new();
    let mut c3: HashMap<(u32, u32, u32), u64> = HashMap::new();
    let mut seq = Vec::new();
    for (i, s) in sentences.iter().enumerate() {
        seq.clear();
        seq.push(bos);
        for w in s {
            let id = vocab
                .id(w.surface())
                .ok_or_else(|| Error::OutOfVocabulary {
                    token: w.surface().to_string(),
                    sentence: i,
                })?;
            seq.push(id);
        }
        if boundary == BoundaryMode::Sentence {
            seq.push(eos);
        }
        for j in 1..seq.len() {
            c1[seq[j] as usize] += 1;
            if order >= 2 {
                *c2.entry((seq[j - 1], seq[j])).or_default() += 1;
            }
            if order >= 3 && j >= 2 {
                *c3.entry((seq[j - 2], seq[j - 1], seq[j])).or_default() += 1;
            }
        }
    }

    let total: u64 = c1.iter().sum();
    let types = c1.iter().filter(|c| **c > 0).count() as u64;
    let uniform = 1.0 / n_events as f64;
    let mut unigrams: Vec<Entry> = c1
        .iter()
        .map(|&c| Entry {
            prob: if total == 0 {
                uniform
            } else {
                (c as f64 + types as f64 * uniform) / (total + types) as f64
            },
            bow: None,
        })
        .collect();
    unigrams[bos as usize].prob = 0.0;
    if boundary == BoundaryMode::NoBoundary {
        unigrams[eos as usize].prob = 0.0;
    }

    let bigram_ctx = context_totals(c2.iter().map(|(&(v, _), &c)| (v, c)));
    for (&v, &(sum, t)) in &bigram_ctx {
        unigrams[v as usize].bow = Some(t as f64 / (sum + t) as f64);
    }
    let mut bigrams: HashMap<(u32, u32), Entry> = c2
        .iter()
        .map(|(&(v, w), &c)| {
            let (sum, t) = bigram_ctx[&v];
            let p = (c as f64 + t as f64 * unigrams[w as usize].prob) / (sum + t) as f64;
            ((v, w), Entry { prob: p, bow: None })
        })
        .collect();

    let trigram_ctx = context_totals(c3.iter().map(|(&(u, v, _), &c)| ((u, v), c)));
    let mut trigrams = HashMap::with_capacity(c3.len());
    for (&(u, v, w), &c) in &c3 {
        let (sum, t) = trigram_ctx[&(u, v)];
        let lower = match bigrams.get(&(v, w)) {
            Some(e) => e.prob,
            None => unigrams[v as usize].bow.unwrap_or(1.0) * unigrams[w as usize].prob,
        };
        let p = (c as f64 + t as f64 * lower) / (sum + t) as f64;
        trigrams.insert((u, v, w), p);
    }
    for (&(u, v), &(sum, t)) in &trigram_ctx {
        bigrams
            .get_mut(&(u, v))
            .expect("every trigram context is an observed bigram")
            .bow = Some(t as f64 / (sum + t) as f64);
    }

    Ok(NGramLM {
        vocab,
        order,
        boundary,
        smoothing: WITTEN_BELL.into(),
        model: Model::Backoff(Backoff {
            unigrams,
            bigrams,
            trigrams,
        }),
    })
}

/// Per-context (total count, distinct continuations).
fn context_totals<K: std::hash::Hash + Eq>(
    items: impl Iterator<Item = (K, u64)>,
) -> HashMap<K, (u64, u64)> {
    let mut out: HashMap<K, (u64, u64)> = HashMap::new();
    for (k, c) in items {
        let e = out.entry(k).or_default();
        e.0 += c;
        e.1 += 1;
    }
    out
}
