//! Tagged multilingual text: tokens, utterances, corpora, the line-oriented
//! corpus file format and descriptive statistics.
//!
//! Corpus files hold one utterance per line with tab-separated fields:
//!
//! ```text
//! <utt_id> TAB <speaker> TAB <batch> TAB <duration_s> TAB <tokens> [TAB <status[:provenance]>]
//! ```
//!
//! `<tokens>` is a space-separated list of `surface_TAG` items, or `-` for an
//! untranscribed segment. Lines starting with `#` are comments.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::ops::{Add, AddAssign};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Language {
    #[serde(rename = "E")]
    English,
    #[serde(rename = "Z")]
    Zulu,
    #[serde(rename = "X")]
    Xhosa,
    #[serde(rename = "S")]
    Sesotho,
    #[serde(rename = "T")]
    Setswana,
}

impl Language {
    pub const ALL: [Language; 5] = [
        Language::English,
        Language::Zulu,
        Language::Xhosa,
        Language::Sesotho,
        Language::Setswana,
    ];

    /// The four Bantu languages, in the fixed pair order EZ, EX, ES, ET.
    pub const BANTU: [Language; 4] = [
        Language::Zulu,
        Language::Xhosa,
        Language::Sesotho,
        Language::Setswana,
    ];

    pub fn code(self) -> char {
        match self {
            Language::English => 'E',
            Language::Zulu => 'Z',
            Language::Xhosa => 'X',
            Language::Sesotho => 'S',
            Language::Setswana => 'T',
        }
    }

    pub fn from_code(code: char) -> Result<Self> {
        match code {
            'E' => Ok(Language::English),
            'Z' => Ok(Language::Zulu),
            'X' => Ok(Language::Xhosa),
            'S' => Ok(Language::Sesotho),
            'T' => Ok(Language::Setswana),
            other => Err(Error::UnknownLanguage(other.to_string())),
        }
    }

    pub fn is_bantu(self) -> bool {
        self != Language::English
    }

    pub fn name(self) -> &'static str {
        match self {
            Language::English => "English",
            Language::Zulu => "isiZulu",
            Language::Xhosa => "isiXhosa",
            Language::Sesotho => "Sesotho",
            Language::Setswana => "Setswana",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Language::from_code(c),
            _ => Err(Error::UnknownLanguage(s.to_string())),
        }
    }
}

/// Parses a compact language list such as `EZ` or `E,Z`.
pub fn parse_language_set(s: &str) -> Result<BTreeSet<Language>> {
    s.chars()
        .filter(|c| *c != ',' && !c.is_whitespace())
        .map(Language::from_code)
        .collect()
}

/// A word token carrying its language tag.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TaggedToken {
    surface: String,
    lang: Language,
}

impl TaggedToken {
    pub fn new(surface: impl Into<String>, lang: Language) -> Result<Self> {
        let surface = surface.into();
        if !is_valid_surface(&surface) {
            return Err(Error::InvalidToken(surface));
        }
        Ok(TaggedToken { surface, lang })
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn lang(&self) -> Language {
        self.lang
    }
}

pub(crate) fn is_valid_surface(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(char::is_whitespace)
}

impl fmt::Display for TaggedToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.surface, self.lang.code())
    }
}

impl FromStr for TaggedToken {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (surface, tag) = s
            .rsplit_once('_')
            .ok_or_else(|| Error::InvalidToken(s.to_string()))?;
        TaggedToken::new(surface, tag.parse()?)
    }
}

/// Parses a space-separated sequence of `surface_TAG` tokens.
pub fn parse_tokens(s: &str) -> Result<Vec<TaggedToken>> {
    s.split_whitespace().map(str::parse).collect()
}

pub fn format_tokens(tokens: &[TaggedToken]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.to_string());
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BatchId(String);

impl BatchId {
    pub const MANT: &'static str = "ManT";
    pub const B1: &'static str = "B1";
    pub const B2: &'static str = "B2";
    pub const B3: &'static str = "B3";

    pub fn new(name: impl Into<String>) -> Self {
        BatchId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for BatchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for BatchId {
    fn from(s: &str) -> Self {
        BatchId(s.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Manual,
    Auto,
    Untranscribed,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Manual => "manual",
            Status::Auto => "auto",
            Status::Untranscribed => "untranscribed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    id: String,
    speaker: String,
    batch: BatchId,
    duration: f64,
    tokens: Vec<TaggedToken>,
    status: Status,
    provenance: Option<String>,
}

impl Utterance {
    pub fn new(
        id: impl Into<String>,
        speaker: impl Into<String>,
        batch: BatchId,
        duration: f64,
        tokens: Vec<TaggedToken>,
        status: Status,
        provenance: Option<String>,
    ) -> Result<Self> {
        let id = id.into();
        let speaker = speaker.into();
        let invalid = |message: &str| Error::InvalidUtterance {
            id: id.clone(),
            message: message.to_string(),
        };
        if !is_valid_surface(&id) {
            return Err(invalid("utterance id must be non-empty without whitespace"));
        }
        if !is_valid_surface(&speaker) || !is_valid_surface(batch.as_str()) {
            return Err(invalid(
                "speaker and batch must be non-empty without whitespace",
            ));
        }
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(invalid("duration must be a nonnegative number"));
        }
        if (status == Status::Untranscribed) != tokens.is_empty() {
            return Err(invalid("untranscribed iff the token list is empty"));
        }
        if status == Status::Auto && provenance.is_none() {
            return Err(invalid("automatic transcriptions need a provenance"));
        }
        if let Some(p) = &provenance {
            if !is_valid_surface(p) {
                return Err(invalid("provenance must be non-empty without whitespace"));
            }
        }
        Ok(Utterance {
            id,
            speaker,
            batch,
            duration,
            tokens,
            status,
            provenance,
        })
    }

    pub fn manual(
        id: impl Into<String>,
        speaker: impl Into<String>,
        batch: BatchId,
        duration: f64,
        tokens: Vec<TaggedToken>,
    ) -> Result<Self> {
        Utterance::new(id, speaker, batch, duration, tokens, Status::Manual, None)
    }

    pub fn untranscribed(
        id: impl Into<String>,
        speaker: impl Into<String>,
        batch: BatchId,
        duration: f64,
    ) -> Result<Self> {
        Utterance::new(
            id,
            speaker,
            batch,
            duration,
            Vec::new(),
            Status::Untranscribed,
            None,
        )
    }

    /// A copy of this segment carrying an automatic transcription.
    pub fn with_auto_transcription(&self, tokens: Vec<TaggedToken>, system: &str) -> Result<Self> {
        Utterance::new(
            self.id.clone(),
            self.speaker.clone(),
            self.batch.clone(),
            self.duration,
            tokens,
            Status::Auto,
            Some(system.to_string()),
        )
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn speaker(&self) -> &str {
        &self.speaker
    }

    pub fn batch(&self) -> &BatchId {
        &self.batch
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn tokens(&self) -> &[TaggedToken] {
        &self.tokens
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    pub fn is_transcribed(&self) -> bool {
        self.status != Status::Untranscribed
    }

    pub fn languages(&self) -> BTreeSet<Language> {
        self.tokens.iter().map(TaggedToken::lang).collect()
    }

    pub fn is_code_switched(&self) -> bool {
        self.languages().len() > 1
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(TaggedToken::surface).collect()
    }
}

/// An ordered collection of utterances with unique ids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    utterances: Vec<Utterance>,
}

impl Corpus {
    pub fn new(utterances: Vec<Utterance>) -> Result<Self> {
        let mut seen = HashSet::new();
        for u in &utterances {
            if !seen.insert(u.id()) {
                return Err(Error::DuplicateUtterance(u.id().to_string()));
            }
        }
        Ok(Corpus { utterances })
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn into_utterances(self) -> Vec<Utterance> {
        self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Utterance> {
        self.utterances.iter()
    }

    /// Token sequences of all transcribed utterances.
    pub fn sentences(&self) -> Vec<Vec<TaggedToken>> {
        self.utterances
            .iter()
            .filter(|u| u.is_transcribed())
            .map(|u| u.tokens().to_vec())
            .collect()
    }

    pub fn filter(&self, mut keep: impl FnMut(&Utterance) -> bool) -> Corpus {
        Corpus {
            utterances: self
                .utterances
                .iter()
                .filter(|u| keep(u))
                .cloned()
                .collect(),
        }
    }

    /// Appends another corpus, rejecting ids already present.
    pub fn extend(&mut self, other: &Corpus) -> Result<()> {
        let existing: HashSet<&str> = self.utterances.iter().map(Utterance::id).collect();
        if let Some(dup) = other.iter().find(|u| existing.contains(u.id())) {
            return Err(Error::DuplicateUtterance(dup.id().to_string()));
        }
        self.utterances.extend(other.utterances.iter().cloned());
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Utterance;
    type IntoIter = std::slice::Iter<'a, Utterance>;

    fn into_iter(self) -> Self::IntoIter {
        self.utterances.iter()
    }
}

/// Splits a non-comment record line into its tab-separated fields.
/// Returns `None` for blank and comment lines.
pub(crate) fn record_fields(line: &str) -> Option<Vec<&str>> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() || line.starts_with('#') {
        return None;
    }
    Some(line.split('\t').collect())
}

pub(crate) fn parse_duration(field: &str, line: usize) -> Result<f64> {
    if field == "-" {
        return Ok(0.0);
    }
    match field.parse::<f64>() {
        Ok(d) if d.is_finite() && d >= 0.0 => Ok(d),
        _ => Err(Error::Parse {
            line,
            message: format!("invalid duration `{field}`"),
        }),
    }
}

pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut utterances = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let Some(fields) = record_fields(raw) else {
            continue;
        };
        if fields.len() != 5 && fields.len() != 6 {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected 5 or 6 tab-separated fields, found {}",
                    fields.len()
                ),
            });
        }
        let duration = parse_duration(fields[3], line)?;
        let tokens = if fields[4] == "-" {
            Vec::new()
        } else {
            parse_tokens(fields[4]).map_err(|e| match e {
                Error::UnknownLanguage(_) => e,
                other => Error::Parse {
                    line,
                    message: other.to_string(),
                },
            })?
        };
        let (status, provenance) = match fields.get(5) {
            Some(field) => parse_status(field, line)?,
            None if tokens.is_empty() => (Status::Untranscribed, None),
            None => (Status::Manual, None),
        };
        let utt = Utterance::new(
            fields[0],
            fields[1],
            BatchId::new(fields[2]),
            duration,
            tokens,
            status,
            provenance,
        )
        .map_err(|e| match e {
            Error::InvalidUtterance { message, .. } => Error::Parse { line, message },
            other => other,
        })?;
        utterances.push(utt);
    }
    Corpus::new(utterances)
}

fn parse_status(field: &str, line: usize) -> Result<(Status, Option<String>)> {
    let (status, provenance) = match field.split_once(':') {
        Some((s, p)) => (s, Some(p.to_string())),
        None => (field, None),
    };
    let status = match status {
        "manual" => Status::Manual,
        "auto" => Status::Auto,
        "untranscribed" => Status::Untranscribed,
        other => {
            return Err(Error::Parse {
                line,
                message: format!("unknown status `{other}`"),
            })
        }
    };
    Ok((status, provenance))
}

pub fn format_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for u in corpus {
        let tokens = if u.tokens.is_empty() {
            "-".to_string()
        } else {
            format_tokens(&u.tokens)
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}",
            u.id, u.speaker, u.batch, u.duration, tokens
        ));
        let implicit = matches!(
            (u.status, &u.provenance),
            (Status::Manual, None) | (Status::Untranscribed, None)
        );
        if !implicit {
            out.push('\t');
            out.push_str(u.status.as_str());
            if let Some(p) = &u.provenance {
                out.push(':');
                out.push_str(p);
            }
        }
        out.push('\n');
    }
    out
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_corpus(corpus)).map_err(|e| Error::io(path, e))
}

/// Directional switch counts between adjacent tokens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchCounts {
    /// English followed by a Bantu language.
    pub eb: u64,
    /// Bantu language followed by English.
    pub be: u64,
    pub bantu_bantu: u64,
}

impl SwitchCounts {
    pub fn total(&self) -> u64 {
        self.eb + self.be + self.bantu_bantu
    }
}

impl Add for SwitchCounts {
    type Output = SwitchCounts;

    fn add(self, rhs: SwitchCounts) -> SwitchCounts {
        SwitchCounts {
            eb: self.eb + rhs.eb,
            be: self.be + rhs.be,
            bantu_bantu: self.bantu_bantu + rhs.bantu_bantu,
        }
    }
}

impl AddAssign for SwitchCounts {
    fn add_assign(&mut self, rhs: SwitchCounts) {
        *self = *self + rhs;
    }
}

pub fn count_token_switches(tokens: &[TaggedToken]) -> SwitchCounts {
    let mut counts = SwitchCounts::default();
    for pair in tokens.windows(2) {
        match (pair[0].lang(), pair[1].lang()) {
            (a, b) if a == b => {}
            (Language::English, _) => counts.eb += 1,
            (_, Language::English) => counts.be += 1,
            _ => counts.bantu_bantu += 1,
        }
    }
    counts
}

pub fn count_switches(utterance: &Utterance) -> Result<SwitchCounts> {
    if !utterance.is_transcribed() {
        return Err(Error::Untranscribed(utterance.id().to_string()));
    }
    Ok(count_token_switches(utterance.tokens()))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageStats {
    /// Seconds of monolingual utterances in this language.
    pub mono_duration: f64,
    /// Seconds of code-switched utterances containing this language; the
    /// full utterance duration is attributed to every language present.
    pub cs_duration: f64,
    /// Code-switched seconds split across languages by token share, so
    /// that shares sum to the unsplit code-switched total.
    pub cs_duration_share: f64,
    pub tokens: u64,
    pub types: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_language: BTreeMap<Language, LanguageStats>,
    pub utterances: u64,
    pub untranscribed: u64,
    pub mono_duration: f64,
    pub cs_duration: f64,
    /// Transcribed duration (monolingual plus code-switched).
    pub total_duration: f64,
    pub untranscribed_duration: f64,
    pub tokens: u64,
    pub types: u64,
    pub switches: SwitchCounts,
}

pub const DURATION_ATTRIBUTION_NOTE: &str =
    "CS duration: full utterance duration attributed to every language present; \
     CS share: duration split by token share";

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut stats = CorpusStats::default();
    let mut types: BTreeMap<Language, HashSet<&str>> = BTreeMap::new();
    for lang in Language::ALL {
        stats.per_language.insert(lang, LanguageStats::default());
        types.insert(lang, HashSet::new());
    }
    for u in corpus {
        stats.utterances += 1;
        if !u.is_transcribed() {
            stats.untranscribed += 1;
            stats.untranscribed_duration += u.duration();
            continue;
        }
        let mut counts: BTreeMap<Language, u64> = BTreeMap::new();
        for t in u.tokens() {
            *counts.entry(t.lang()).or_default() += 1;
            types.get_mut(&t.lang()).unwrap().insert(t.surface());
        }
        let n = u.tokens().len() as f64;
        let mono = counts.len() == 1;
        for (lang, count) in &counts {
            let entry = stats.per_language.get_mut(lang).unwrap();
            entry.tokens += count;
            if mono {
                entry.mono_duration += u.duration();
            } else {
                entry.cs_duration += u.duration();
                entry.cs_duration_share += u.duration() * (*count as f64) / n;
            }
        }
        if mono {
            stats.mono_duration += u.duration();
        } else {
            stats.cs_duration += u.duration();
        }
        stats.tokens += u.tokens().len() as u64;
        stats.switches += count_token_switches(u.tokens());
    }
    for (lang, set) in types {
        let n = set.len() as u64;
        stats.per_language.get_mut(&lang).unwrap().types = n;
        stats.types += n;
    }
    stats.total_duration = stats.mono_duration + stats.cs_duration;
    stats
}

impl CorpusStats {
    /// Aligned text table in the layout of a duration/token/type summary.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>8}\n",
            "Language", "Mono(m)", "CS(m)", "CSshr(m)", "Total(h)", "Tokens", "Types"
        ));
        for (lang, s) in &self.per_language {
            out.push_str(&format!(
                "{:<10} {:>10.1} {:>10.1} {:>10.1} {:>10.2} {:>10} {:>8}\n",
                lang.name(),
                s.mono_duration / 60.0,
                s.cs_duration / 60.0,
                s.cs_duration_share / 60.0,
                (s.mono_duration + s.cs_duration_share) / 3600.0,
                s.tokens,
                s.types
            ));
        }
        out.push_str(&format!(
            "{:<10} {:>10.1} {:>10.1} {:>10.1} {:>10.2} {:>10} {:>8}\n",
            "Total",
            self.mono_duration / 60.0,
            self.cs_duration / 60.0,
            self.cs_duration / 60.0,
            self.total_duration / 3600.0,
            self.tokens,
            self.types
        ));
        out.push_str(&format!(
            "switches: EB {} BE {} Bantu-Bantu {}\n",
            self.switches.eb, self.switches.be, self.switches.bantu_bantu
        ));
        out.push_str(&format!("note: {DURATION_ATTRIBUTION_NOTE}\n"));
        out
    }
}
