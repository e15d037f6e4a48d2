//! Transcription systems and batch-wise semi-supervised training.
//!
//! A system is trained on the manual data (ManT) plus automatic
//! transcriptions of B1, then retrained after each stage adds further
//! batches transcribed by an earlier system. Bilingual systems keep one
//! recognizer per English-Bantu pair and route every pooled utterance to
//! each pair whose languages cover its tags; five-lingual systems use a
//! single recognizer.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{BatchId, Corpus, Language, Status, TaggedToken, Utterance};
use crate::datagen::{pair_code, GeneratedData, ScenarioSpec};
use crate::error::{Error, Result};
use crate::lm::{interpolate_tuned, train_ngram, NGramLM, Vocabulary, WeightChoice};
use crate::metrics::{EvalAccumulator, EvalReport};
use crate::recognizer::{
    lexicon_for, train_with_lexicon, DecodeResult, Lexicon, Observation, Observations, Recognizer,
    RecognizerParams,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemKind {
    Bilingual,
    FiveLingual,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Bilingual,
    FiveLingual,
    BilingualOnFiveLingual,
}

/// Source of the B1 transcriptions in every pool.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeedTranscripts {
    #[serde(rename = "AutoT_B")]
    Bilingual,
    #[serde(rename = "AutoT_F")]
    FiveLingual,
}

impl SeedTranscripts {
    pub fn label(self) -> &'static str {
        match self {
            SeedTranscripts::Bilingual => "AutoT_B",
            SeedTranscripts::FiveLingual => "AutoT_F",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchStep {
    pub batch: String,
    pub transcriber: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    /// Name of the system this stage produces.
    pub system: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<SystemKind>,
    pub add: Vec<BatchStep>,
}

/// Declarative system configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    pub mode: Mode,
    pub seed_transcripts: SeedTranscripts,
    pub baseline: String,
    #[serde(default)]
    pub stages: Vec<Stage>,
    /// Drop automatic transcriptions below this confidence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_confidence: Option<f64>,
}

/// Names of the shipped configurations.
pub const SHIPPED_SYSTEMS: [&str; 13] = [
    "A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "N",
];

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn shipped(name: &str) -> Result<Self> {
        let text = match name {
            "A" => include_str!("../configs/systems/A.toml"),
            "B" => include_str!("../configs/systems/B.toml"),
            "C" => include_str!("../configs/systems/C.toml"),
            "D" => include_str!("../configs/systems/D.toml"),
            "E" => include_str!("../configs/systems/E.toml"),
            "F" => include_str!("../configs/systems/F.toml"),
            "G" => include_str!("../configs/systems/G.toml"),
            "H" => include_str!("../configs/systems/H.toml"),
            "I" => include_str!("../configs/systems/I.toml"),
            "J" => include_str!("../configs/systems/J.toml"),
            "K" => include_str!("../configs/systems/K.toml"),
            "L" => include_str!("../configs/systems/L.toml"),
            "N" => include_str!("../configs/systems/N.toml"),
            other => return Err(Error::Config(format!("no shipped system `{other}`"))),
        };
        Self::from_toml_str(text)
    }

    pub fn baseline_kind(&self) -> SystemKind {
        match self.mode {
            Mode::Bilingual => SystemKind::Bilingual,
            _ => SystemKind::FiveLingual,
        }
    }

    pub fn stage_kind(&self, index: usize) -> SystemKind {
        if let Some(k) = self.stages[index].kind {
            return k;
        }
        match self.mode {
            Mode::Bilingual => SystemKind::Bilingual,
            Mode::FiveLingual => SystemKind::FiveLingual,
            Mode::BilingualOnFiveLingual if index + 1 == self.stages.len() => SystemKind::Bilingual,
            Mode::BilingualOnFiveLingual => SystemKind::FiveLingual,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(m));
        let mut known: Vec<&str> = vec![&self.baseline];
        let mut added: BTreeSet<&str> = BTreeSet::new();
        for stage in &self.stages {
            if known.contains(&stage.system.as_str()) {
                return err(format!("system `{}` is produced twice", stage.system));
            }
            if stage.add.is_empty() {
                return err(format!("stage `{}` adds no batches", stage.system));
            }
            for step in &stage.add {
                if !known.contains(&step.transcriber.as_str()) {
                    return err(format!(
                        "transcriber `{}` for {} is not the baseline or an earlier system",
                        step.transcriber, step.batch
                    ));
                }
                if step.batch == BatchId::MANT || step.batch == BatchId::B1 {
                    return err(format!(
                        "batch {} is part of every baseline pool",
                        step.batch
                    ));
                }
                if !added.insert(&step.batch) {
                    return err(format!("batch {} is added twice", step.batch));
                }
            }
            known.push(&stage.system);
        }
        let last = known.last().copied().unwrap_or(&self.baseline);
        if last != self.name {
            return err(format!("the plan produces `{last}`, not `{}`", self.name));
        }
        if let Some(c) = self.min_confidence {
            if !c.is_finite() {
                return err("min_confidence must be finite".into());
            }
        }
        Ok(())
    }
}

/// Segment classification of one transcribed batch: monolingual by language, or code-switched.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentCounts {
    pub monolingual: BTreeMap<Language, u64>,
    pub code_switched: u64,
    /// Code-switched segments with two or more Bantu languages.
    pub bantu_bantu: u64,
    pub total: u64,
}

impl SegmentCounts {
    pub fn add(&mut self, tokens: &[TaggedToken]) {
        let langs: BTreeSet<Language> = tokens.iter().map(TaggedToken::lang).collect();
        self.total += 1;
        if langs.len() == 1 {
            *self
                .monolingual
                .entry(*langs.iter().next().unwrap())
                .or_default() += 1;
        } else {
            self.code_switched += 1;
            if langs.iter().filter(|l| l.is_bantu()).count() >= 2 {
                self.bantu_bantu += 1;
            }
        }
    }
}

/// Automatic transcriptions of one batch by one system.
#[derive(Clone, Debug)]
pub struct TranscriptionSet {
    pub batch: String,
    pub system: String,
    pub utterances: Corpus,
    pub confidences: Vec<f64>,
    /// Pair whose decoder produced each transcription (bilingual only).
    pub pair_labels: Vec<Option<Language>>,
    pub segments: SegmentCounts,
}

fn transcription_set(
    batch: &Observations,
    system: &str,
    results: Vec<(DecodeResult, Option<Language>)>,
) -> Result<TranscriptionSet> {
    let name = batch
        .iter()
        .next()
        .map(|o| o.batch.to_string())
        .unwrap_or_default();
    let mut utts = Vec::with_capacity(results.len());
    let mut segments = SegmentCounts::default();
    let mut confidences = Vec::with_capacity(results.len());
    let mut pair_labels = Vec::with_capacity(results.len());
    for (o, (r, pair)) in batch.iter().zip(results) {
        segments.add(&r.hypothesis);
        utts.push(Utterance::new(
            &o.id,
            &o.speaker,
            o.batch.clone(),
            o.duration,
            r.hypothesis,
            Status::Auto,
            Some(system.to_string()),
        )?);
        confidences.push(r.confidence);
        pair_labels.push(pair);
    }
    Ok(TranscriptionSet {
        batch: name,
        system: system.to_string(),
        utterances: Corpus::new(utts)?,
        confidences,
        pair_labels,
        segments,
    })
}

fn bantu_of(r: &Recognizer) -> Result<Language> {
    let bantu: Vec<Language> = r
        .languages()
        .iter()
        .copied()
        .filter(|l| l.is_bantu())
        .collect();
    match bantu.as_slice() {
        [b] if r.languages().contains(&Language::English) && r.languages().len() == 2 => Ok(*b),
        _ => Err(Error::InvalidParameter(
            "bilingual recognizers must cover English and one Bantu language".into(),
        )),
    }
}

/// Highest-confidence result among parallel decoders; ties go to the
/// earliest pair in the order EZ, EX, ES, ET.
fn select_best(results: Vec<(Language, DecodeResult)>) -> (DecodeResult, Language) {
    let mut best: Option<(Language, DecodeResult)> = None;
    for (pair, r) in results {
        let take = match &best {
            None => true,
            Some((bp, br)) => {
                r.confidence > br.confidence
                    || (r.confidence == br.confidence && pair_rank(pair) < pair_rank(*bp))
            }
        };
        if take {
            best = Some((pair, r));
        }
    }
    let (p, r) = best.expect("at least one decoder");
    (r, p)
}

fn pair_rank(bantu: Language) -> usize {
    Language::BANTU
        .iter()
        .position(|&b| b == bantu)
        .unwrap_or(usize::MAX)
}

fn check_pairs(recognizers: &[&Recognizer]) -> Result<Vec<Language>> {
    if recognizers.is_empty() {
        return Err(Error::Empty("bilingual recognizers"));
    }
    let pairs = recognizers
        .iter()
        .map(|r| bantu_of(r))
        .collect::<Result<Vec<_>>>()?;
    if pairs.iter().collect::<BTreeSet<_>>().len() != pairs.len() {
        return Err(Error::InvalidParameter(
            "two recognizers cover the same pair".into(),
        ));
    }
    Ok(pairs)
}

/// Decodes every observation with each bilingual recognizer and keeps the
/// most confident output, which also labels the segment's language pair.
pub fn transcribe_parallel_bilingual(
    recognizers: &[&Recognizer],
    batch: &Observations,
    system: &str,
) -> Result<TranscriptionSet> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let pairs = check_pairs(recognizers)?;
    let results = batch
        .as_slice()
        .par_iter()
        .map(|o| decode_parallel(recognizers, &pairs, o).map(|(r, p)| (r, Some(p))))
        .collect::<Result<Vec<_>>>()?;
    transcription_set(batch, system, results)
}

fn decode_parallel(
    recognizers: &[&Recognizer],
    pairs: &[Language],
    o: &Observation,
) -> Result<(DecodeResult, Language)> {
    let all = recognizers
        .iter()
        .zip(pairs)
        .map(|(r, &p)| r.decode(o).map(|d| (p, d)))
        .collect::<Result<Vec<_>>>()?;
    Ok(select_best(all))
}

pub fn transcribe_five_lingual(
    recognizer: &Recognizer,
    batch: &Observations,
    system: &str,
) -> Result<TranscriptionSet> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let results = recognizer
        .decode_all(batch.as_slice())?
        .into_iter()
        .map(|r| (r, None))
        .collect();
    transcription_set(batch, system, results)
}

/// Trains a trigram on automatic transcription text and interpolates it
/// with `baseline`, tuning the weight on `dev`.
pub fn build_semisup_lm(
    baseline: &NGramLM,
    transcripts: &[Vec<TaggedToken>],
    dev: &[Vec<TaggedToken>],
) -> Result<(NGramLM, WeightChoice)> {
    if transcripts.iter().all(Vec::is_empty) {
        return Err(Error::Empty("transcript text"));
    }
    let extra = train_ngram(
        transcripts,
        baseline.vocab().clone(),
        baseline.order(),
        baseline.boundary(),
    )?;
    interpolate_tuned(&extra, baseline, dev)
}

/// Everything a run needs: manual data, observations and scoring sets.
#[derive(Clone, Debug)]
pub struct RunData {
    pub vocabulary: Arc<Vocabulary>,
    pub manual: Corpus,
    /// Observations of every batch, including ManT, dev and test.
    pub observations: Observations,
    pub dev: Corpus,
    pub test: Corpus,
    pub params: RecognizerParams,
}

impl RunData {
    pub fn from_generated(data: &GeneratedData, spec: &ScenarioSpec) -> Self {
        RunData {
            vocabulary: Arc::new(data.vocabulary()),
            manual: data.batch(BatchId::MANT),
            observations: data.observations.clone(),
            dev: data.batch("dev"),
            test: data.batch("test"),
            params: spec.recognizer_params(),
        }
    }

    fn batch(&self, name: &str) -> Result<Observations> {
        let obs = self.observations.filter(|o| o.batch.as_str() == name);
        if obs.is_empty() {
            return Err(Error::MissingBatch(name.to_string()));
        }
        Ok(obs)
    }
}

enum Trained {
    Bilingual(Vec<Recognizer>),
    FiveLingual(Box<Recognizer>),
}

impl Trained {
    fn transcribe(&self, batch: &Observations, system: &str) -> Result<TranscriptionSet> {
        match self {
            Trained::Bilingual(rs) => {
                let refs: Vec<&Recognizer> = rs.iter().collect();
                transcribe_parallel_bilingual(&refs, batch, system)
            }
            Trained::FiveLingual(r) => transcribe_five_lingual(r, batch, system),
        }
    }

    /// Decodes a scoring utterance. Bilingual systems use the decoder of
    /// the reference's pair, falling back to confidence selection when the
    /// reference holds no Bantu word.
    fn decode_reference(&self, reference: &Utterance, o: &Observation) -> Result<DecodeResult> {
        match self {
            Trained::FiveLingual(r) => r.decode(o),
            Trained::Bilingual(rs) => {
                let bantu = reference
                    .tokens()
                    .iter()
                    .map(|t| t.lang())
                    .find(|l| l.is_bantu());
                if let Some(r) = bantu.and_then(|b| rs.iter().find(|r| r.languages().contains(&b)))
                {
                    return r.decode(o);
                }
                let refs: Vec<&Recognizer> = rs.iter().collect();
                let pairs = check_pairs(&refs)?;
                decode_parallel(&refs, &pairs, o).map(|(r, _)| r)
            }
        }
    }
}

/// Scores of one system on one scoring set: per pair and `overall`.
pub type EvalTable = BTreeMap<String, EvalReport>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemReport {
    pub name: String,
    pub kind: SystemKind,
    /// Pool sources, e.g. `ManT`, `AutoT_B(B1)`, `A(B2)`.
    pub pool: Vec<String>,
    pub pool_utterances: u64,
    /// Recognizer name (`EZ`..`ET` or `all`) to routed training utterances.
    pub routed: BTreeMap<String, u64>,
    /// Automatic segments that fit no bilingual pair.
    pub dropped: u64,
    /// Weight of the automatic-transcription LM per recognizer.
    pub lm_weights: BTreeMap<String, f64>,
    pub p_correct: BTreeMap<String, f64>,
    pub dev: EvalTable,
    pub test: EvalTable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptionSummary {
    pub source: String,
    pub batch: String,
    pub system: String,
    pub segments: SegmentCounts,
    pub kept: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: String,
    pub systems: Vec<SystemReport>,
    pub transcriptions: Vec<TranscriptionSummary>,
    pub confidence_note: String,
}

pub const CONFIDENCE_NOTE: &str =
    "confidence = best-path log joint probability (channel + LM) per observed symbol";

/// Runs the plan of `config`: seeds the pool with ManT and the B1
/// transcriptions, trains the baseline, then trains one system per stage
/// on the growing pool. Every system is scored on dev and test.
pub fn run_system(config: &SystemConfig, data: &RunData) -> Result<RunReport> {
    config.validate()?;
    data.params.validate()?;
    for stage in &config.stages {
        for step in &stage.add {
            data.batch(&step.batch)?;
        }
    }
    let run = Runner::new(data)?;

    let seed_label = config.seed_transcripts.label();
    let seed_kind = match config.seed_transcripts {
        SeedTranscripts::Bilingual => SystemKind::Bilingual,
        SeedTranscripts::FiveLingual => SystemKind::FiveLingual,
    };
    let seed_trainer = run.train(seed_kind, &[], &[])?;
    let seed_set = seed_trainer
        .0
        .transcribe(&data.batch(BatchId::B1)?, seed_label)?;
    let mut transcriptions = vec![run.summary(
        format!("{seed_label}(B1)"),
        &seed_set,
        seed_set.utterances.len(),
    )];
    let mut pool_sources = vec![BatchId::MANT.to_string(), format!("{seed_label}(B1)")];
    let mut auto_pool: Vec<Utterance> = seed_set.utterances.into_utterances();

    let mut systems: HashMap<String, Trained> = HashMap::new();
    let mut reports = Vec::new();
    let kinds: Vec<(String, SystemKind)> =
        std::iter::once((config.baseline.clone(), config.baseline_kind()))
            .chain(
                config
                    .stages
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.system.clone(), config.stage_kind(i))),
            )
            .collect();

    for (step_index, (name, kind)) in kinds.iter().enumerate() {
        if step_index > 0 {
            let stage = &config.stages[step_index - 1];
            for step in &stage.add {
                let set = systems[&step.transcriber]
                    .transcribe(&data.batch(&step.batch)?, &step.transcriber)?;
                let kept: Vec<Utterance> = set
                    .utterances
                    .iter()
                    .zip(&set.confidences)
                    .filter(|(_, c)| config.min_confidence.is_none_or(|m| **c >= m))
                    .map(|(u, _)| u.clone())
                    .collect();
                let source = format!("{}({})", step.transcriber, step.batch);
                transcriptions.push(run.summary(source.clone(), &set, kept.len()));
                pool_sources.push(source);
                auto_pool.extend(kept);
            }
        }
        let (trained, mut report) = run.train(*kind, &auto_pool, &pool_sources)?;
        report.name = name.clone();
        report.dev = run.evaluate(&trained, &data.dev)?;
        report.test = run.evaluate(&trained, &data.test)?;
        systems.insert(name.clone(), trained);
        reports.push(report);
    }

    Ok(RunReport {
        config: config.name.clone(),
        systems: reports,
        transcriptions,
        confidence_note: CONFIDENCE_NOTE.into(),
    })
}

struct Runner<'a> {
    data: &'a RunData,
    lexicons: BTreeMap<String, Arc<Lexicon>>,
}

fn pair_languages(bantu: Language) -> BTreeSet<Language> {
    [Language::English, bantu].into_iter().collect()
}

fn covered_by(u: &Utterance, langs: &BTreeSet<Language>) -> bool {
    u.tokens().iter().all(|t| langs.contains(&t.lang()))
}

impl<'a> Runner<'a> {
    fn new(data: &'a RunData) -> Result<Self> {
        let params = &data.params;
        let mut sets: Vec<(String, BTreeSet<Language>)> = Language::BANTU
            .iter()
            .map(|&b| (pair_code(b), pair_languages(b)))
            .collect();
        sets.push(("all".into(), Language::ALL.into_iter().collect()));
        let lexicons = sets
            .into_par_iter()
            .map(|(k, langs)| lexicon_for(&data.vocabulary, &langs, params).map(|l| (k, l)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(Runner { data, lexicons })
    }

    fn summary(&self, source: String, set: &TranscriptionSet, kept: usize) -> TranscriptionSummary {
        TranscriptionSummary {
            source,
            batch: set.batch.clone(),
            system: set.system.clone(),
            segments: set.segments.clone(),
            kept: kept as u64,
        }
    }

    fn train_one(
        &self,
        key: &str,
        langs: &BTreeSet<Language>,
        auto: &[Utterance],
    ) -> Result<(Recognizer, Option<WeightChoice>, u64)> {
        let manual = self.data.manual.filter(|u| covered_by(u, langs));
        let auto: Vec<Utterance> = auto
            .iter()
            .filter(|u| covered_by(u, langs))
            .cloned()
            .collect();
        let mut pool = manual.clone();
        pool.extend(&Corpus::new(auto.clone())?)?;
        let lexicon = self.lexicons[key].clone();
        let rec = train_with_lexicon(
            &pool,
            langs,
            &self.data.params,
            lexicon,
            Some(&self.data.observations),
        )?;
        let dev: Vec<Vec<TaggedToken>> = self
            .data
            .dev
            .iter()
            .filter(|u| covered_by(u, langs))
            .map(|u| u.tokens().to_vec())
            .collect();
        if manual.is_empty() || auto.is_empty() || dev.is_empty() {
            return Ok((rec, None, pool.len() as u64));
        }
        let base = train_ngram(
            &manual.sentences(),
            rec.lexicon().vocab().clone(),
            self.data.params.order,
            rec.lm().boundary(),
        )?;
        let texts: Vec<Vec<TaggedToken>> = auto.iter().map(|u| u.tokens().to_vec()).collect();
        let (lm, choice) = build_semisup_lm(&base, &texts, &dev)?;
        Ok((rec.with_lm(lm)?, Some(choice), pool.len() as u64))
    }

    fn train(
        &self,
        kind: SystemKind,
        auto: &[Utterance],
        sources: &[String],
    ) -> Result<(Trained, SystemReport)> {
        let mut report = SystemReport {
            name: String::new(),
            kind,
            pool: sources.to_vec(),
            pool_utterances: (self.data.manual.len() + auto.len()) as u64,
            routed: BTreeMap::new(),
            dropped: 0,
            lm_weights: BTreeMap::new(),
            p_correct: BTreeMap::new(),
            dev: BTreeMap::new(),
            test: BTreeMap::new(),
        };
        let mut record = |key: &str, rec: &Recognizer, w: Option<WeightChoice>, n: u64| {
            report.routed.insert(key.to_string(), n);
            report
                .p_correct
                .insert(key.to_string(), rec.channel().p_correct);
            if let Some(w) = w {
                report.lm_weights.insert(key.to_string(), w.lambda);
            }
        };
        let trained = match kind {
            SystemKind::FiveLingual => {
                let langs = Language::ALL.into_iter().collect();
                let (rec, w, n) = self.train_one("all", &langs, auto)?;
                record("all", &rec, w, n);
                Trained::FiveLingual(Box::new(rec))
            }
            SystemKind::Bilingual => {
                let trained = Language::BANTU
                    .par_iter()
                    .map(|&b| self.train_one(&pair_code(b), &pair_languages(b), auto))
                    .collect::<Result<Vec<_>>>()?;
                let mut recs = Vec::with_capacity(4);
                for (b, (rec, w, n)) in Language::BANTU.iter().zip(trained) {
                    record(&pair_code(*b), &rec, w, n);
                    recs.push(rec);
                }
                Trained::Bilingual(recs)
            }
        };
        if kind == SystemKind::Bilingual {
            report.dropped = auto
                .iter()
                .filter(|u| {
                    !Language::BANTU
                        .iter()
                        .any(|&b| covered_by(u, &pair_languages(b)))
                })
                .count() as u64;
        }
        Ok((trained, report))
    }

    fn evaluate(&self, system: &Trained, refs: &Corpus) -> Result<EvalTable> {
        let decoded =
            refs.utterances()
                .par_iter()
                .map(|u| {
                    let o = self.data.observations.get(u.id()).ok_or_else(|| {
                        Error::MissingBatch(format!("observation for {}", u.id()))
                    })?;
                    system.decode_reference(u, o)
                })
                .collect::<Result<Vec<_>>>()?;
        let mut by_pair: BTreeMap<String, EvalAccumulator> = BTreeMap::new();
        let mut overall = EvalAccumulator::default();
        for (u, d) in refs.iter().zip(&decoded) {
            overall.add(u.tokens(), &d.hypothesis);
            if let Some(b) = u.tokens().iter().map(|t| t.lang()).find(|l| l.is_bantu()) {
                by_pair
                    .entry(pair_code(b))
                    .or_default()
                    .add(u.tokens(), &d.hypothesis);
            }
        }
        let mut table = EvalTable::new();
        for (k, acc) in by_pair {
            table.insert(k, acc.report()?);
        }
        table.insert("overall".into(), overall.report()?);
        Ok(table)
    }
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn system(&self, name: &str) -> Option<&SystemReport> {
        self.systems.iter().find(|s| s.name == name)
    }

    /// Mixed WERs in percent, one row per system and one column per pair.
    pub fn render_table(&self) -> String {
        let cols = ["EZ", "EX", "ES", "ET", "overall"];
        let mut out = String::new();
        for (title, pick) in [("dev", true), ("test", false)] {
            let _ = writeln!(out, "Mixed WER (%) on {title}");
            let _ = write!(out, "{:<8}", "System");
            for c in cols {
                let _ = write!(out, "{c:>9}");
            }
            out.push('\n');
            for s in &self.systems {
                let table = if pick { &s.dev } else { &s.test };
                let _ = write!(out, "{:<8}", s.name);
                for c in cols {
                    match table.get(c) {
                        Some(r) => {
                            let _ = write!(out, "{:>9.1}", 100.0 * r.mixed_wer);
                        }
                        None => {
                            let _ = write!(out, "{:>9}", "-");
                        }
                    }
                }
                out.push('\n');
            }
            out.push('\n');
        }
        for s in &self.systems {
            let _ = writeln!(out, "{}: pool = {}", s.name, s.pool.join(" + "));
        }
        let _ = writeln!(out, "note: {CONFIDENCE_NOTE}");
        out
    }
}
