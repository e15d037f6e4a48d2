//! Synthetic ground-truth corpora and their noisy observations.
//!
//! Each language gets a pseudo-word lexicon whose surfaces carry a language
//! suffix (`kalobe-z`), so lexicons are disjoint unless homographs are
//! injected. Utterances follow a first-order Markov process over language
//! tags with per-language Zipf unigram word draws; observations pass the
//! true words through the recognizer's channel model.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{BatchId, Corpus, Language, TaggedToken, Utterance};
use crate::error::{Error, Result};
use crate::lm::Vocabulary;
use crate::recognizer::{ChannelModel, Lexicon, Observation, Observations, RecognizerParams};
use crate::seed::rng_for;

const CONSONANTS: &[u8] = b"bdfghklmnprstvwyz";
const VOWELS: &[u8] = b"aeiou";

/// Canonical batch order; other batch names follow alphabetically.
pub const BATCH_ORDER: [&str; 6] = ["ManT", "B1", "B2", "B3", "dev", "test"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub min: usize,
    pub max: usize,
}

fn default_syllables() -> Range {
    Range { min: 2, max: 4 }
}

fn default_length() -> Range {
    Range { min: 4, max: 12 }
}

fn default_half() -> f64 {
    0.5
}

fn default_one() -> f64 {
    1.0
}

fn default_cs_only() -> Vec<String> {
    vec!["dev".into(), "test".into()]
}

fn default_successors() -> usize {
    5
}

fn default_candidates() -> usize {
    5
}

fn default_order() -> usize {
    3
}

fn default_true() -> bool {
    true
}

/// Scenario description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub vocab_sizes: BTreeMap<Language, usize>,
    #[serde(default = "default_syllables")]
    pub syllables: Range,
    #[serde(default = "default_length")]
    pub utterance_length: Range,
    pub switch_rate: f64,
    #[serde(default)]
    pub mono_fraction: f64,
    /// Probability that a monolingual utterance, or the first word of a
    /// mixed one, is English.
    #[serde(default = "default_half")]
    pub english_share: f64,
    #[serde(default = "default_one")]
    pub zipf_exponent: f64,
    #[serde(default)]
    pub homograph_rate: f64,
    /// Probability that a word following a same-language word is drawn
    /// from the predecessor's successor set instead of the unigram.
    #[serde(default)]
    pub coherence: f64,
    #[serde(default = "default_successors")]
    pub successors: usize,
    /// Batches holding only code-switched utterances.
    #[serde(default = "default_cs_only")]
    pub cs_only: Vec<String>,
    /// Utterance counts: pair code (`EZ`) to batch name to count.
    pub pairs: BTreeMap<String, BTreeMap<String, usize>>,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    #[serde(default = "default_order")]
    pub lm_order: usize,
    #[serde(default = "default_true")]
    pub reestimate_channel: bool,
}

/// English and Bantu member of a pair code such as `EZ`.
pub fn parse_pair(code: &str) -> Result<(Language, Language)> {
    let cs: Vec<char> = code.chars().collect();
    if cs.len() != 2 {
        return Err(Error::Config(format!(
            "pair `{code}` must have two letters"
        )));
    }
    let (a, b) = (Language::from_code(cs[0])?, Language::from_code(cs[1])?);
    if a != Language::English || !b.is_bantu() {
        return Err(Error::Config(format!(
            "pair `{code}` must be English then a Bantu language"
        )));
    }
    Ok((a, b))
}

pub fn pair_code(bantu: Language) -> String {
    format!("E{}", bantu.code())
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ScenarioSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// The shipped reference scenario.
    pub fn reference() -> Self {
        Self::from_toml_str(include_str!("../configs/scenarios/reference.toml"))
            .expect("reference scenario is valid")
    }

    pub fn recognizer_params(&self) -> RecognizerParams {
        RecognizerParams {
            channel: self.channel,
            candidates: self.candidates,
            order: self.lm_order,
            reestimate_channel: self.reestimate_channel,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1]")))
            }
        };
        unit("switch_rate", self.switch_rate)?;
        unit("mono_fraction", self.mono_fraction)?;
        unit("english_share", self.english_share)?;
        unit("homograph_rate", self.homograph_rate)?;
        unit("coherence", self.coherence)?;
        if self.coherence > 0.0 && self.successors == 0 {
            return Err(Error::Config(
                "coherence needs at least one successor".into(),
            ));
        }
        if !(self.zipf_exponent >= 0.0 && self.zipf_exponent.is_finite()) {
            return Err(Error::Config("zipf_exponent must be non-negative".into()));
        }
        let r = |name: &str, r: Range| {
            if r.min >= 1 && r.min <= r.max {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} needs 1 <= min <= max")))
            }
        };
        r("syllables", self.syllables)?;
        r("utterance_length", self.utterance_length)?;
        self.channel
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.candidates == 0 || !(1..=3).contains(&self.lm_order) {
            return Err(Error::Config(
                "candidates must be positive and lm_order in 1..=3".into(),
            ));
        }
        for (&lang, &n) in &self.vocab_sizes {
            if n == 0 {
                return Err(Error::Config(format!(
                    "vocabulary size for {lang} must be at least 1"
                )));
            }
            if n as f64 > self.surface_capacity() {
                return Err(Error::Config(format!(
                    "vocabulary size {n} for {lang} exceeds the syllable space"
                )));
            }
        }
        for (pair, batches) in &self.pairs {
            let (e, b) = parse_pair(pair)?;
            for l in [e, b] {
                if !self.vocab_sizes.contains_key(&l) {
                    return Err(Error::Config(format!(
                        "pair {pair} needs a vocabulary size for {l}"
                    )));
                }
            }
            for (batch, &n) in batches {
                if n > 0 && self.cs_only.contains(batch) {
                    if self.switch_rate == 0.0 {
                        return Err(Error::Config(format!(
                            "batch {batch} is code-switched only but switch_rate is 0"
                        )));
                    }
                    if self.utterance_length.max < 2 {
                        return Err(Error::Config(format!(
                            "batch {batch} is code-switched only but utterances have one word"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn surface_capacity(&self) -> f64 {
        let per = (CONSONANTS.len() * VOWELS.len()) as f64;
        (self.syllables.min..=self.syllables.max)
            .map(|n| per.powi(n as i32))
            .sum()
    }

    /// Batch names in canonical order.
    pub fn batches(&self) -> Vec<String> {
        let names: BTreeSet<&String> = self.pairs.values().flat_map(|b| b.keys()).collect();
        let mut out: Vec<String> = BATCH_ORDER
            .iter()
            .filter(|b| names.iter().any(|n| n == *b))
            .map(|b| b.to_string())
            .collect();
        out.extend(
            names
                .into_iter()
                .filter(|n| !BATCH_ORDER.contains(&n.as_str()))
                .cloned(),
        );
        out
    }
}

/// Per-language lexicons in Zipf rank order.
pub fn build_languages(spec: &ScenarioSpec) -> BTreeMap<Language, Vec<String>> {
    let mut out = BTreeMap::new();
    for (&lang, &size) in &spec.vocab_sizes {
        let mut rng = rng_for(spec.seed, &format!("lexicon/{}", lang.code()));
        let suffix = lang.code().to_ascii_lowercase();
        let mut seen = HashSet::with_capacity(size);
        let mut words = Vec::with_capacity(size);
        while words.len() < size {
            let n = rng.gen_range(spec.syllables.min..=spec.syllables.max);
            let mut w = String::with_capacity(2 * n + 2);
            for _ in 0..n {
                w.push(CONSONANTS[rng.gen_range(0..CONSONANTS.len())] as char);
                w.push(VOWELS[rng.gen_range(0..VOWELS.len())] as char);
            }
            w.push('-');
            w.push(suffix);
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        out.insert(lang, words);
    }
    if spec.homograph_rate > 0.0 {
        if let Some(english) = out.get(&Language::English).cloned() {
            for (lang, words) in out.iter_mut().filter(|(l, _)| l.is_bantu()) {
                let mut rng = rng_for(spec.seed, &format!("homographs/{}", lang.code()));
                let mut present: HashSet<String> = words.iter().cloned().collect();
                for w in words.iter_mut() {
                    if rng.gen::<f64>() < spec.homograph_rate {
                        let e = &english[rng.gen_range(0..english.len())];
                        if present.insert(e.clone()) {
                            *w = e.clone();
                        }
                    }
                }
            }
        }
    }
    out
}

/// Tagged vocabulary of every lexicon entry.
pub fn scenario_vocabulary(lexicons: &BTreeMap<Language, Vec<String>>) -> Vocabulary {
    let tokens: Vec<TaggedToken> = lexicons
        .iter()
        .flat_map(|(&l, ws)| {
            ws.iter()
                .map(move |w| TaggedToken::new(w.clone(), l).expect("valid surface"))
        })
        .collect();
    Vocabulary::from_tagged(&tokens)
}

#[derive(Clone, Debug)]
pub struct GeneratedData {
    pub lexicons: BTreeMap<Language, Vec<String>>,
    /// Ground truth for every batch, as manual transcriptions.
    pub truth: Corpus,
    pub observations: Observations,
}

impl GeneratedData {
    pub fn vocabulary(&self) -> Vocabulary {
        scenario_vocabulary(&self.lexicons)
    }

    pub fn batch(&self, name: &str) -> Corpus {
        self.truth.filter(|u| u.batch().as_str() == name)
    }

    /// The batch with its transcriptions removed.
    pub fn untranscribed(&self, name: &str) -> Corpus {
        let utts = self
            .batch(name)
            .iter()
            .map(|u| {
                Utterance::untranscribed(u.id(), u.speaker(), u.batch().clone(), u.duration())
                    .expect("fields already valid")
            })
            .collect();
        Corpus::new(utts).expect("ids unique")
    }

    pub fn batch_observations(&self, name: &str) -> Observations {
        self.observations.filter(|o| o.batch.as_str() == name)
    }
}

/// Successor sets: for each word, `n` uniform draws from the same language,
/// so rare continuations are only learnt from enough text.
fn successor_sets(
    spec: &ScenarioSpec,
    lexicons: &BTreeMap<Language, Vec<String>>,
) -> BTreeMap<Language, Vec<Vec<usize>>> {
    if spec.coherence == 0.0 {
        return BTreeMap::new();
    }
    lexicons
        .iter()
        .map(|(&l, ws)| {
            let mut rng = rng_for(spec.seed, &format!("successors/{}", l.code()));
            let sets = (0..ws.len())
                .map(|_| {
                    (0..spec.successors)
                        .map(|_| rng.gen_range(0..ws.len()))
                        .collect()
                })
                .collect();
            (l, sets)
        })
        .collect()
}

fn zipf(size: usize, exponent: f64) -> WeightedIndex<f64> {
    WeightedIndex::new((1..=size).map(|r| (r as f64).powf(-exponent))).expect("positive weights")
}

fn sample_tags<R: Rng>(
    spec: &ScenarioSpec,
    pair: (Language, Language),
    len: usize,
    cs_only: bool,
    rng: &mut R,
) -> Vec<Language> {
    let pick = |rng: &mut R| {
        if rng.gen::<f64>() < spec.english_share {
            pair.0
        } else {
            pair.1
        }
    };
    if !cs_only && rng.gen::<f64>() < spec.mono_fraction {
        return vec![pick(rng); len];
    }
    loop {
        let mut tags = Vec::with_capacity(len);
        tags.push(pick(rng));
        for i in 1..len {
            let prev = tags[i - 1];
            let flip = rng.gen::<f64>() < spec.switch_rate;
            tags.push(match (flip, prev == pair.0) {
                (false, _) => prev,
                (true, true) => pair.1,
                (true, false) => pair.0,
            });
        }
        if !cs_only || tags.windows(2).any(|w| w[0] != w[1]) {
            return tags;
        }
    }
}

/// Generates ground truth and observations for every batch and pair.
/// Each (batch, pair) cell draws from its own named sub-seed.
pub fn generate_corpus(spec: &ScenarioSpec) -> Result<GeneratedData> {
    spec.validate()?;
    let lexicons = build_languages(spec);
    let vocab = Arc::new(scenario_vocabulary(&lexicons));
    let lexicon = Lexicon::new(vocab.clone(), spec.channel.fan_out + 1)?;
    let draws: BTreeMap<Language, WeightedIndex<f64>> = lexicons
        .iter()
        .map(|(&l, ws)| (l, zipf(ws.len(), spec.zipf_exponent)))
        .collect();
    let successors = successor_sets(spec, &lexicons);

    let mut cells = Vec::new();
    for batch in spec.batches() {
        for (pair, counts) in &spec.pairs {
            if let Some(&n) = counts.get(&batch) {
                if n > 0 {
                    cells.push((batch.clone(), pair.clone(), n));
                }
            }
        }
    }
    let generated: Vec<Result<(Vec<Utterance>, Vec<Observation>)>> = cells
        .par_iter()
        .map(|(batch, pair, n)| {
            let langs = parse_pair(pair)?;
            let cs_only = spec.cs_only.contains(batch);
            let mut rng = rng_for(spec.seed, &format!("utterances/{batch}/{pair}"));
            let mut noise = rng_for(spec.seed, &format!("channel/{batch}/{pair}"));
            let mut utts = Vec::with_capacity(*n);
            let mut obs = Vec::with_capacity(*n);
            for i in 0..*n {
                let len = rng.gen_range(spec.utterance_length.min..=spec.utterance_length.max);
                let tags = sample_tags(spec, langs, len, cs_only, &mut rng);
                let mut ranks: Vec<usize> = Vec::with_capacity(len);
                for (k, l) in tags.iter().enumerate() {
                    let follow = spec.coherence > 0.0
                        && k > 0
                        && tags[k - 1] == *l
                        && rng.gen::<f64>() < spec.coherence;
                    ranks.push(if follow {
                        let set = &successors[l][ranks[k - 1]];
                        set[rng.gen_range(0..set.len())]
                    } else {
                        draws[l].sample(&mut rng)
                    });
                }
                let tokens: Vec<TaggedToken> = tags
                    .iter()
                    .zip(&ranks)
                    .map(|(l, &r)| {
                        TaggedToken::new(lexicons[l][r].clone(), *l).expect("valid surface")
                    })
                    .collect();
                let id = format!("{batch}-{pair}-{i:05}");
                let speaker = format!("{pair}-spk{:02}", rng.gen_range(0..10));
                let duration = (len * 40) as f64 / 100.0;
                let ids: Vec<u32> = tokens
                    .iter()
                    .map(|t| vocab.id(t.surface()).expect("lexicon word"))
                    .collect();
                let symbols = spec.channel.corrupt(&lexicon, &ids, &mut noise);
                obs.push(Observation::new(
                    &id,
                    &speaker,
                    BatchId::new(batch),
                    duration,
                    symbols,
                )?);
                utts.push(Utterance::manual(
                    id,
                    speaker,
                    BatchId::new(batch),
                    duration,
                    tokens,
                )?);
            }
            Ok((utts, obs))
        })
        .collect();

    let mut utts = Vec::new();
    let mut obs = Vec::new();
    for cell in generated {
        let (u, o) = cell?;
        utts.extend(u);
        obs.extend(o);
    }
    Ok(GeneratedData {
        lexicons,
        truth: Corpus::new(utts)?,
        observations: Observations::new(obs)?,
    })
}
