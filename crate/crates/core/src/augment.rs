//! Artificial training text: an n-gram generator for running text and
//! synthetic code-switched trigrams, plus interpolation of the extra text
//! into an existing model.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Language, SwitchCounts, TaggedToken};
use crate::error::{Error, Result};
use crate::lm::{
    interpolate_tuned, train_ngram, Backoff, BoundaryMode, Model, NGramLM, Vocabulary,
    WeightChoice, Word,
};
use crate::seed::rng_for;

/// Sentence length at which a model without `</s>` is cut into a new
/// sentence.
pub const NO_BOUNDARY_SPAN: usize = 25;

/// A source of word sequences over a fixed vocabulary.
pub trait Generator {
    fn vocab(&self) -> &Arc<Vocabulary>;

    /// Draws the next word given the current sentence so far (oldest
    /// first). `None` ends the sentence.
    fn next_word(&mut self, sentence: &[u32]) -> Option<u32>;

    /// Whether `next_word` ever returns `None`.
    fn ends_sentences(&self) -> bool {
        true
    }
}

/// Ancestral sampler over an n-gram model. `temperature` rescales log
/// probabilities: `P(w|h)^(1/T)`, renormalized.
pub struct NGramSampler {
    lm: NGramLM,
    temperature: f64,
    rng: ChaCha8Rng,
    tables: Tables,
    ctx: Vec<u32>,
}

/// Trains a trigram model on `texts` and wraps it for sampling.
pub fn train_generator<W: Word>(
    texts: &[Vec<W>],
    vocab: Arc<Vocabulary>,
    seed: u64,
) -> Result<NGramSampler> {
    let lm = train_ngram(texts, vocab, 3, BoundaryMode::Sentence)?;
    NGramSampler::new(lm, 1.0, seed)
}

impl NGramSampler {
    pub fn new(lm: NGramLM, temperature: f64, seed: u64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        let tables = Tables::build(&lm);
        Ok(NGramSampler {
            lm,
            temperature,
            rng: rng_for(seed, "augment/generator"),
            tables,
            ctx: Vec::with_capacity(3),
        })
    }

    pub fn lm(&self) -> &NGramLM {
        &self.lm
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    fn sample_tempered(&mut self) -> u32 {
        let inv = 1.0 / self.temperature;
        let events: Vec<u32> = self.lm.event_ids().collect();
        let weights: Vec<f64> = events
            .iter()
            .map(|&w| self.lm.prob_ids(&self.ctx, w).powf(inv))
            .collect();
        let dist = WeightedIndex::new(&weights).expect("model assigns positive mass");
        events[dist.sample(&mut self.rng)]
    }
}

impl Generator for NGramSampler {
    fn vocab(&self) -> &Arc<Vocabulary> {
        self.lm.vocab()
    }

    fn next_word(&mut self, sentence: &[u32]) -> Option<u32> {
        let (bos, eos) = (self.lm.vocab().bos(), self.lm.vocab().eos());
        let n = self.lm.order() - 1;
        self.ctx.clear();
        if sentence.len() < n {
            self.ctx.push(bos);
        }
        let keep = sentence.len().min(n);
        self.ctx
            .extend_from_slice(&sentence[sentence.len() - keep..]);
        let w = if self.temperature == 1.0 {
            self.tables.sample(&self.ctx, &mut self.rng)
        } else {
            self.sample_tempered()
        };
        (w != eos).then_some(w)
    }

    fn ends_sentences(&self) -> bool {
        self.lm.boundary() == BoundaryMode::Sentence
    }
}

/// Seen continuations of one context with their explicit probabilities.
#[derive(Debug, Default)]
struct Group {
    ids: Vec<u32>,
    cum: Vec<f64>,
}

impl Group {
    fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut cum = Vec::with_capacity(pairs.len());
        let mut acc = 0.0;
        for &(_, p) in &pairs {
            acc += p;
            cum.push(acc);
        }
        Group {
            ids: pairs.into_iter().map(|p| p.0).collect(),
            cum,
        }
    }

    fn mass(&self) -> f64 {
        self.cum.last().copied().unwrap_or(0.0)
    }

    fn contains(&self, w: u32) -> bool {
        self.ids.binary_search(&w).is_ok()
    }

    fn pick(&self, u: f64) -> u32 {
        let i = self
            .cum
            .partition_point(|&c| c <= u)
            .min(self.ids.len() - 1);
        self.ids[i]
    }
}

enum Tables {
    Backoff {
        unigram: Group,
        bigrams: HashMap<u32, Group>,
        trigrams: HashMap<(u32, u32), Group>,
    },
    Mixture {
        first: Box<Tables>,
        second: Box<Tables>,
        weight: f64,
    },
}

impl Tables {
    fn build(lm: &NGramLM) -> Tables {
        match &lm.model {
            Model::Backoff(b) => Self::from_backoff(b),
            Model::Mixture {
                first,
                second,
                weight,
            } => Tables::Mixture {
                first: Box::new(Self::build(first)),
                second: Box::new(Self::build(second)),
                weight: *weight,
            },
        }
    }

    fn from_backoff(b: &Backoff) -> Tables {
        let unigram = Group::from_pairs(
            b.unigrams
                .iter()
                .enumerate()
                .filter(|(_, e)| e.prob > 0.0)
                .map(|(i, e)| (i as u32, e.prob))
                .collect(),
        );
        let mut by_v: HashMap<u32, Vec<(u32, f64)>> = HashMap::new();
        for (&(v, w), e) in &b.bigrams {
            by_v.entry(v).or_default().push((w, e.prob));
        }
        let mut by_uv: HashMap<(u32, u32), Vec<(u32, f64)>> = HashMap::new();
        for (&(u, v, w), &p) in &b.trigrams {
            by_uv.entry((u, v)).or_default().push((w, p));
        }
        Tables::Backoff {
            unigram,
            bigrams: by_v
                .into_iter()
                .map(|(k, v)| (k, Group::from_pairs(v)))
                .collect(),
            trigrams: by_uv
                .into_iter()
                .map(|(k, v)| (k, Group::from_pairs(v)))
                .collect(),
        }
    }

    fn sample<R: Rng>(&self, ctx: &[u32], rng: &mut R) -> u32 {
        match self {
            Tables::Mixture {
                first,
                second,
                weight,
            } => {
                if rng.gen::<f64>() < *weight {
                    first.sample(ctx, rng)
                } else {
                    second.sample(ctx, rng)
                }
            }
            Tables::Backoff { .. } => self.sample_level(ctx, rng),
        }
    }

    /// Seen continuations are taken with their explicit mass; otherwise the
    /// shorter context is sampled with those words rejected, which is the
    /// backoff distribution exactly.
    fn sample_level<R: Rng>(&self, ctx: &[u32], rng: &mut R) -> u32 {
        let Tables::Backoff {
            unigram,
            bigrams,
            trigrams,
        } = self
        else {
            unreachable!("called on backoff tables only")
        };
        let group = match *ctx {
            [] => return unigram.pick(rng.gen::<f64>() * unigram.mass()),
            [v] => bigrams.get(&v),
            [u, v] => trigrams.get(&(u, v)),
            _ => unreachable!("contexts hold at most two words"),
        };
        let shorter = &ctx[1..];
        let Some(group) = group else {
            return self.sample_level(shorter, rng);
        };
        let u = rng.gen::<f64>();
        if u < group.mass() {
            return group.pick(u);
        }
        loop {
            let w = self.sample_level(shorter, rng);
            if !group.contains(w) {
                return w;
            }
        }
    }
}

/// Generated text stored as word ids, one range per sentence.
#[derive(Clone, Debug)]
pub struct GeneratedText {
    vocab: Arc<Vocabulary>,
    words: Vec<u32>,
    ends: Vec<usize>,
}

impl GeneratedText {
    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn num_words(&self) -> usize {
        self.words.len()
    }

    pub fn num_sentences(&self) -> usize {
        self.ends.len()
    }

    pub fn sentence_ids(&self) -> impl Iterator<Item = &[u32]> {
        let mut start = 0;
        self.ends.iter().map(move |&end| {
            let s = &self.words[start..end];
            start = end;
            s
        })
    }

    /// Sentences as tagged tokens; a homograph takes its first language.
    pub fn sentences(&self) -> Vec<Vec<TaggedToken>> {
        self.sentence_ids()
            .map(|s| s.iter().map(|&w| self.token(w)).collect())
            .collect()
    }

    fn token(&self, w: u32) -> TaggedToken {
        let surface = self.vocab.word(w);
        let lang = self
            .vocab
            .languages_of(surface)
            .and_then(|ls| ls.iter().next().copied())
            .unwrap_or(Language::English);
        TaggedToken::new(surface, lang).expect("vocabulary words are valid tokens")
    }

    /// Writes corpus records `id speaker batch - tokens auto:<source>`.
    pub fn write_corpus<W: Write + ?Sized>(
        &self,
        out: &mut W,
        batch: &str,
        source: &str,
    ) -> io::Result<()> {
        let tags: Vec<String> = (0..self.vocab.len() as u32)
            .map(|w| self.token(w).to_string())
            .collect();
        for (i, s) in self.sentence_ids().enumerate() {
            write!(out, "{batch}-{i:08}\t{source}\t{batch}\t-\t")?;
            for (k, &w) in s.iter().enumerate() {
                if k > 0 {
                    out.write_all(b" ")?;
                }
                out.write_all(tags[w as usize].as_bytes())?;
            }
            writeln!(out, "\tauto:{source}")?;
        }
        Ok(())
    }
}

/// Draws exactly `n_words` words, split into sentences where the generator
/// ends one. The last sentence is cut at the word budget. Generators that
/// never end sentences are split every `NO_BOUNDARY_SPAN` words.
pub fn generate<G: Generator + ?Sized>(generator: &mut G, n_words: usize) -> Result<GeneratedText> {
    if n_words == 0 {
        return Err(Error::InvalidParameter("n_words must be at least 1".into()));
    }
    let vocab = generator.vocab().clone();
    let mut words = Vec::with_capacity(n_words);
    let mut bounds = Vec::new();
    let mut start = 0;
    let ends = generator.ends_sentences();
    while words.len() < n_words {
        let next = generator.next_word(&words[start..]);
        match next {
            Some(w) => {
                words.push(w);
                if !ends && words.len() - start == NO_BOUNDARY_SPAN {
                    bounds.push(words.len());
                    start = words.len();
                }
            }
            None if words.len() > start => {
                bounds.push(words.len());
                start = words.len();
            }
            None => {}
        }
    }
    if words.len() > start {
        bounds.push(words.len());
    }
    Ok(GeneratedText {
        vocab,
        words,
        ends: bounds,
    })
}

/// Three words with a language change between the first two.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticTrigram {
    pub words: [TaggedToken; 3],
    pub multiplicity: u64,
}

impl SyntheticTrigram {
    pub fn is_eb(&self) -> bool {
        self.words[0].lang() == Language::English
    }
}

/// Synthesizes `n` code-switched trigrams. Each draw picks a direction
/// from the EB:BE proportions of `switches` and a Bantu language
/// uniformly among those in `lms`; `w1` comes from the first language's
/// unigram, `w2` from the second language's unigram and `w3` from the
/// second language's bigram continuation of `w2`. Words are restricted to
/// each model's words of the wanted language. Equal trigrams are merged,
/// in order of first draw.
pub fn synthesize_cs_trigrams(
    lms: &BTreeMap<Language, NGramLM>,
    switches: &SwitchCounts,
    n: usize,
    seed: u64,
) -> Result<Vec<SyntheticTrigram>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let english = lms.get(&Language::English).ok_or_else(|| {
        Error::InvalidParameter("trigram synthesis needs an English model".into())
    })?;
    let bantu: Vec<(Language, &NGramLM)> = lms
        .iter()
        .filter(|(l, _)| l.is_bantu())
        .map(|(&l, m)| (l, m))
        .collect();
    if bantu.is_empty() {
        return Err(Error::InvalidParameter(
            "trigram synthesis needs a Bantu model".into(),
        ));
    }
    if switches.eb + switches.be == 0 {
        return Err(Error::InvalidParameter(
            "switch counts have no EB or BE switches".into(),
        ));
    }
    let p_eb = switches.eb as f64 / (switches.eb + switches.be) as f64;

    let mut samplers: BTreeMap<Language, LanguageSampler> = BTreeMap::new();
    samplers.insert(
        Language::English,
        LanguageSampler::new(english, Language::English)?,
    );
    for &(l, m) in &bantu {
        samplers.insert(l, LanguageSampler::new(m, l)?);
    }

    let mut rng = rng_for(seed, "augment/trigrams");
    // Ids are per model, so keys carry both languages.
    let mut index: HashMap<(Language, Language, [u32; 3]), usize> = HashMap::new();
    let mut out: Vec<SyntheticTrigram> = Vec::new();
    for _ in 0..n {
        let b = bantu[rng.gen_range(0..bantu.len())].0;
        let (la, lb) = if rng.gen::<f64>() < p_eb {
            (Language::English, b)
        } else {
            (b, Language::English)
        };
        let w1 = samplers[&la].unigram(&mut rng);
        let sb = samplers.get_mut(&lb).expect("sampler per language");
        let w2 = sb.unigram(&mut rng);
        let w3 = sb.continuation(w2, &mut rng);
        match index.get(&(la, lb, [w1, w2, w3])) {
            Some(&i) => out[i].multiplicity += 1,
            None => {
                index.insert((la, lb, [w1, w2, w3]), out.len());
                out.push(SyntheticTrigram {
                    words: [
                        samplers[&la].token(w1),
                        samplers[&lb].token(w2),
                        samplers[&lb].token(w3),
                    ],
                    multiplicity: 1,
                });
            }
        }
    }
    Ok(out)
}

/// Unigram and bigram-continuation draws over one language's words.
struct LanguageSampler<'a> {
    lm: &'a NGramLM,
    lang: Language,
    words: Vec<u32>,
    unigram: WeightedIndex<f64>,
    continuations: HashMap<u32, WeightedIndex<f64>>,
}

impl<'a> LanguageSampler<'a> {
    fn new(lm: &'a NGramLM, lang: Language) -> Result<Self> {
        let vocab = lm.vocab();
        let words: Vec<u32> = (0..vocab.len() as u32)
            .filter(|&w| {
                vocab
                    .languages_of(vocab.word(w))
                    .is_none_or(|ls| ls.contains(&lang))
            })
            .collect();
        let weights: Vec<f64> = words.iter().map(|&w| lm.prob_ids(&[], w)).collect();
        let unigram = WeightedIndex::new(&weights)
            .map_err(|_| Error::Empty("unigram support for trigram synthesis"))?;
        Ok(LanguageSampler {
            lm,
            lang,
            words,
            unigram,
            continuations: HashMap::new(),
        })
    }

    fn unigram<R: Rng>(&self, rng: &mut R) -> u32 {
        self.words[self.unigram.sample(rng)]
    }

    fn continuation<R: Rng>(&mut self, prev: u32, rng: &mut R) -> u32 {
        let (lm, words) = (self.lm, &self.words);
        let dist = self.continuations.entry(prev).or_insert_with(|| {
            let weights: Vec<f64> = words.iter().map(|&w| lm.prob_ids(&[prev], w)).collect();
            WeightedIndex::new(&weights).expect("unigram support is non-empty")
        });
        self.words[dist.sample(rng)]
    }

    fn token(&self, w: u32) -> TaggedToken {
        TaggedToken::new(self.lm.vocab().word(w), self.lang)
            .expect("vocabulary words are valid tokens")
    }
}

/// Trigrams as three-word training sentences, each repeated by its
/// multiplicity.
pub fn trigram_sentences(trigrams: &[SyntheticTrigram]) -> Vec<Vec<TaggedToken>> {
    trigrams
        .iter()
        .flat_map(|t| std::iter::repeat_n(t.words.to_vec(), t.multiplicity as usize))
        .collect()
}

/// Trains a model of `base`'s order, vocabulary and boundary mode on
/// `extra` and interpolates it with `base`, the weight tuned on `dev`.
pub fn augment_lm<W: Word, D: Word>(
    base: &NGramLM,
    extra: &[Vec<W>],
    dev: &[Vec<D>],
) -> Result<(NGramLM, WeightChoice)> {
    if extra.is_empty() {
        return Err(Error::Empty("extra text"));
    }
    let extra_lm = train_ngram(extra, base.vocab().clone(), base.order(), base.boundary())?;
    interpolate_tuned(&extra_lm, base, dev)
}
