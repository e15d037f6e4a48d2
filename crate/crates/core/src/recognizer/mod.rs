//! Simulated recognizer: a word-level noisy channel combined with an n-gram
//! language model and a tagged lexicon, decoded by exact Viterbi search.

mod channel;
mod decode;
mod lexicon;
mod observation;

use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use channel::{estimate_p_correct, ChannelModel, P_CORRECT_RANGE};
pub use decode::{viterbi, Lattice};
pub use lexicon::Lexicon;
pub use observation::{
    format_observations, load_observations, parse_observations, save_observations, Observation,
    Observations,
};

use crate::corpus::{Corpus, Language, Status, TaggedToken};
use crate::error::{Error, Result};
use crate::lm::{train_ngram, BoundaryMode, NGramLM, Vocabulary};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecognizerParams {
    pub channel: ChannelModel,
    /// Lattice width: candidates kept per observed symbol.
    pub candidates: usize,
    pub order: usize,
    pub reestimate_channel: bool,
}

impl Default for RecognizerParams {
    fn default() -> Self {
        RecognizerParams {
            channel: ChannelModel::default(),
            candidates: 5,
            order: 3,
            reestimate_channel: true,
        }
    }
}

impl RecognizerParams {
    pub fn lexicon_depth(&self) -> usize {
        self.candidates.max(self.channel.fan_out + 1)
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if self.candidates == 0 {
            return Err(Error::InvalidParameter(
                "candidates must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    pub hypothesis: Vec<TaggedToken>,
    /// Best-path log score divided by the number of observed symbols.
    pub confidence: f64,
    pub score: f64,
    pub language_label: BTreeSet<Language>,
}

/// Immutable trained recognizer.
#[derive(Clone, Debug)]
pub struct Recognizer {
    languages: BTreeSet<Language>,
    lm: NGramLM,
    channel: ChannelModel,
    lexicon: Arc<Lexicon>,
    candidates: usize,
    training_utterances: usize,
}

/// Lexicon holding the words of `vocab` tagged with one of `languages`.
pub fn lexicon_for(
    vocab: &Vocabulary,
    languages: &BTreeSet<Language>,
    params: &RecognizerParams,
) -> Result<Arc<Lexicon>> {
    Ok(Arc::new(Lexicon::new(
        Arc::new(vocab.restrict(languages)),
        params.lexicon_depth(),
    )?))
}

/// Trains on `pool` with a lexicon made of the pool's own words.
pub fn train_recognizer(
    pool: &Corpus,
    languages: &BTreeSet<Language>,
    params: &RecognizerParams,
) -> Result<Recognizer> {
    let vocab = Vocabulary::from_tagged(pool.iter().flat_map(|u| u.tokens()));
    let lexicon = lexicon_for(&vocab, languages, params)?;
    train_with_lexicon(pool, languages, params, lexicon, None)
}

/// Trains on `pool` with a fixed lexicon, which may be shared between
/// recognizers. When observations of pooled utterances are given the
/// channel's `p_correct` is re-estimated from them.
pub fn train_with_lexicon(
    pool: &Corpus,
    languages: &BTreeSet<Language>,
    params: &RecognizerParams,
    lexicon: Arc<Lexicon>,
    observations: Option<&Observations>,
) -> Result<Recognizer> {
    params.validate()?;
    if pool.is_empty() {
        return Err(Error::Empty("training pool"));
    }
    if lexicon.depth() < params.lexicon_depth() {
        return Err(Error::InvalidParameter(format!(
            "lexicon depth {} below required {}",
            lexicon.depth(),
            params.lexicon_depth()
        )));
    }
    for id in 0..lexicon.len() as u32 {
        if !languages.contains(&lexicon.tag(id)) {
            return Err(Error::LanguageOutsideSet {
                token: lexicon.word(id).to_string(),
                lang: lexicon.tag(id).code(),
            });
        }
    }
    for u in pool {
        if !u.is_transcribed() {
            return Err(Error::Untranscribed(u.id().to_string()));
        }
        if let Some(t) = u.tokens().iter().find(|t| !languages.contains(&t.lang())) {
            return Err(Error::LanguageOutsideSet {
                token: t.surface().to_string(),
                lang: t.lang().code(),
            });
        }
    }
    let lm = train_ngram(
        &pool.sentences(),
        lexicon.vocab().clone(),
        params.order,
        BoundaryMode::Sentence,
    )?;

    let mut channel = params.channel;
    if params.reestimate_channel {
        if let Some(obs) = observations {
            let pairs = pool
                .iter()
                .filter(|u| u.status() == Status::Manual)
                .filter_map(|u| obs.get(u.id()).map(|o| (o.symbols.as_slice(), u.tokens())));
            if let Some(p) = estimate_p_correct(pairs) {
                channel.p_correct = p.clamp(P_CORRECT_RANGE.0, P_CORRECT_RANGE.1);
            }
        }
    }
    Recognizer::new(languages.clone(), lm, channel, lexicon, params.candidates)
        .map(|r| r.with_training_size(pool.len()))
}

impl Recognizer {
    /// Assembles a recognizer from parts. The model must share the
    /// lexicon's vocabulary.
    pub fn new(
        languages: BTreeSet<Language>,
        lm: NGramLM,
        channel: ChannelModel,
        lexicon: Arc<Lexicon>,
        candidates: usize,
    ) -> Result<Self> {
        channel.validate()?;
        if **lm.vocab() != **lexicon.vocab() {
            return Err(Error::VocabularyMismatch);
        }
        if candidates == 0 || candidates > lexicon.depth() {
            return Err(Error::InvalidParameter(format!(
                "candidates must be in 1..={}",
                lexicon.depth()
            )));
        }
        Ok(Recognizer {
            languages,
            lm,
            channel,
            lexicon,
            candidates,
            training_utterances: 0,
        })
    }

    fn with_training_size(mut self, n: usize) -> Self {
        self.training_utterances = n;
        self
    }

    pub fn languages(&self) -> &BTreeSet<Language> {
        &self.languages
    }

    pub fn lm(&self) -> &NGramLM {
        &self.lm
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }

    pub fn lexicon(&self) -> &Arc<Lexicon> {
        &self.lexicon
    }

    pub fn candidates(&self) -> usize {
        self.candidates
    }

    pub fn training_utterances(&self) -> usize {
        self.training_utterances
    }

    /// Replaces the language model, e.g. with an interpolated one.
    pub fn with_lm(&self, lm: NGramLM) -> Result<Self> {
        if **lm.vocab() != **self.lexicon.vocab() {
            return Err(Error::VocabularyMismatch);
        }
        Ok(Recognizer { lm, ..self.clone() })
    }

    /// Candidates per symbol: its nearest lexicon entries, plus every word
    /// whose confusion set contains it.
    pub fn lattice<S: AsRef<str>>(&self, symbols: &[S]) -> Lattice {
        let confusers = self.lexicon.confusers(self.channel.fan_out);
        symbols
            .iter()
            .map(|o| {
                let o = o.as_ref();
                let mut ids: Vec<u32> = self
                    .lexicon
                    .nearest(o)
                    .iter()
                    .take(self.candidates)
                    .copied()
                    .collect();
                if let Some(oid) = self.lexicon.id(o) {
                    for &w in &confusers[oid as usize] {
                        if !ids.contains(&w) {
                            ids.push(w);
                        }
                    }
                }
                ids.into_iter()
                    .map(|w| (w, self.channel.log_emission(&self.lexicon, o, w)))
                    .collect()
            })
            .collect()
    }

    pub fn decode_symbols<S: AsRef<str>>(&self, symbols: &[S]) -> Result<DecodeResult> {
        if symbols.is_empty() {
            return Err(Error::Empty("observation"));
        }
        let (path, score) = viterbi(&self.lm, &self.lattice(symbols))?;
        let hypothesis: Vec<TaggedToken> = path.iter().map(|&w| self.lexicon.token(w)).collect();
        let language_label = hypothesis.iter().map(TaggedToken::lang).collect();
        Ok(DecodeResult {
            hypothesis,
            confidence: score / symbols.len() as f64,
            score,
            language_label,
        })
    }

    pub fn decode(&self, observation: &Observation) -> Result<DecodeResult> {
        self.decode_symbols(&observation.symbols)
    }

    /// Decodes concurrently; results keep input order.
    pub fn decode_all(&self, observations: &[Observation]) -> Result<Vec<DecodeResult>> {
        observations.par_iter().map(|o| self.decode(o)).collect()
    }
}
