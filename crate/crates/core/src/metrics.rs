//! Recognition scoring: Levenshtein alignment, mixed WER, language-specific
//! WER and code-switched bigram accuracy (CSBA).
//!
//! Tokens match on surface form alone. Substitutions and deletions are
//! charged to the language of the reference word; an insertion is charged
//! to the nearest preceding reference word, or to the following one at the
//! start of an utterance. A switch bigram is two adjacent reference words
//! with different tags; it counts as correct only when both words are
//! exact matches in the alignment.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::corpus::{Corpus, Language, TaggedToken};
use crate::error::{Error, Result};
use crate::lm::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum EditOp {
    Match { reference: usize, hypothesis: usize },
    Substitution { reference: usize, hypothesis: usize },
    Deletion { reference: usize },
    Insertion { hypothesis: usize },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub ops: Vec<EditOp>,
}

impl Alignment {
    pub fn counts(&self) -> ErrorCounts {
        let mut c = ErrorCounts::default();
        for op in &self.ops {
            match op {
                EditOp::Match { .. } => c.ref_len += 1,
                EditOp::Substitution { .. } => {
                    c.sub += 1;
                    c.ref_len += 1;
                }
                EditOp::Deletion { .. } => {
                    c.del += 1;
                    c.ref_len += 1;
                }
                EditOp::Insertion { .. } => c.ins += 1,
            }
        }
        c
    }

    pub fn distance(&self) -> u64 {
        self.counts().errors()
    }

    /// Reference positions aligned as exact matches.
    pub fn matched_references(&self, ref_len: usize) -> Vec<bool> {
        let mut out = vec![false; ref_len];
        for op in &self.ops {
            if let EditOp::Match { reference, .. } = op {
                out[*reference] = true;
            }
        }
        out
    }
}

/// Minimum edit distance alignment with unit costs. The backtrace prefers
/// match, then substitution, deletion and insertion.
pub fn align<R: Word, H: Word>(reference: &[R], hypothesis: &[H]) -> Alignment {
    let (n, m) = (reference.len(), hypothesis.len());
    let mut d = vec![vec![0u32; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i as u32;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j as u32;
    }
    for i in 1..=n {
        for j in 1..=m {
            let same = reference[i - 1].surface() == hypothesis[j - 1].surface();
            let diag = d[i - 1][j - 1] + u32::from(!same);
            d[i][j] = diag.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }

    let mut ops = Vec::with_capacity(n.max(m));
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = reference[i - 1].surface() == hypothesis[j - 1].surface();
            if same && d[i][j] == d[i - 1][j - 1] {
                ops.push(EditOp::Match {
                    reference: i - 1,
                    hypothesis: j - 1,
                });
                i -= 1;
                j -= 1;
                continue;
            }
            if !same && d[i][j] == d[i - 1][j - 1] + 1 {
                ops.push(EditOp::Substitution {
                    reference: i - 1,
                    hypothesis: j - 1,
                });
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && d[i][j] == d[i - 1][j] + 1 {
            ops.push(EditOp::Deletion { reference: i - 1 });
            i -= 1;
        } else {
            ops.push(EditOp::Insertion { hypothesis: j - 1 });
            j -= 1;
        }
    }
    ops.reverse();
    Alignment { ops }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub sub: u64,
    pub del: u64,
    pub ins: u64,
    pub ref_len: u64,
}

impl ErrorCounts {
    pub fn errors(&self) -> u64 {
        self.sub + self.del + self.ins
    }

    /// `(S + D + I) / N`, or `None` without reference words.
    pub fn rate(&self) -> Option<f64> {
        (self.ref_len > 0).then(|| self.errors() as f64 / self.ref_len as f64)
    }
}

impl Add for ErrorCounts {
    type Output = ErrorCounts;

    fn add(self, o: ErrorCounts) -> ErrorCounts {
        ErrorCounts {
            sub: self.sub + o.sub,
            del: self.del + o.del,
            ins: self.ins + o.ins,
            ref_len: self.ref_len + o.ref_len,
        }
    }
}

impl AddAssign for ErrorCounts {
    fn add_assign(&mut self, o: ErrorCounts) {
        *self = *self + o;
    }
}

pub fn wer<R: Word, H: Word>(reference: &[R], hypothesis: &[H]) -> Result<f64> {
    align(reference, hypothesis)
        .counts()
        .rate()
        .ok_or(Error::Empty("reference"))
}

/// Per-language error counts for one aligned pair.
pub fn language_counts(
    reference: &[TaggedToken],
    alignment: &Alignment,
) -> BTreeMap<Language, ErrorCounts> {
    let mut out: BTreeMap<Language, ErrorCounts> = BTreeMap::new();
    for t in reference {
        out.entry(t.lang()).or_default().ref_len += 1;
    }
    let mut last_ref: Option<usize> = None;
    for op in &alignment.ops {
        match *op {
            EditOp::Match { reference: r, .. } => last_ref = Some(r),
            EditOp::Substitution { reference: r, .. } => {
                out.get_mut(&reference[r].lang()).unwrap().sub += 1;
                last_ref = Some(r);
            }
            EditOp::Deletion { reference: r } => {
                out.get_mut(&reference[r].lang()).unwrap().del += 1;
                last_ref = Some(r);
            }
            EditOp::Insertion { .. } => {
                let owner = last_ref.or_else(|| (!reference.is_empty()).then_some(0));
                if let Some(r) = owner {
                    out.get_mut(&reference[r].lang()).unwrap().ins += 1;
                }
            }
        }
    }
    out
}

/// Language-specific WER of a single aligned pair.
pub fn language_specific_wer(
    reference: &[TaggedToken],
    alignment: &Alignment,
) -> BTreeMap<Language, f64> {
    language_counts(reference, alignment)
        .into_iter()
        .filter_map(|(l, c)| c.rate().map(|r| (l, r)))
        .collect()
}

/// (correct, total) switch bigrams of one aligned pair.
pub fn switch_bigram_counts(reference: &[TaggedToken], alignment: &Alignment) -> (u64, u64) {
    let matched = alignment.matched_references(reference.len());
    let mut correct = 0;
    let mut total = 0;
    for i in 1..reference.len() {
        if reference[i - 1].lang() != reference[i].lang() {
            total += 1;
            if matched[i - 1] && matched[i] {
                correct += 1;
            }
        }
    }
    (correct, total)
}

pub fn csba(reference: &[TaggedToken], alignment: &Alignment) -> Option<f64> {
    let (correct, total) = switch_bigram_counts(reference, alignment);
    (total > 0).then(|| correct as f64 / total as f64)
}

pub const CSBA_DEFINITION: &str =
    "CSBA: a reference bigram spanning a language switch is correct iff both words are exact matches";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mixed_wer: f64,
    pub wer_by_language: BTreeMap<Language, f64>,
    pub csba: Option<f64>,
    pub counts: ErrorCounts,
    pub counts_by_language: BTreeMap<Language, ErrorCounts>,
    pub switch_bigrams: u64,
    pub switch_bigrams_correct: u64,
    pub utterances: u64,
}

/// Accumulates pooled counts over aligned pairs.
#[derive(Clone, Debug, Default)]
pub struct EvalAccumulator {
    counts: ErrorCounts,
    by_language: BTreeMap<Language, ErrorCounts>,
    switch_total: u64,
    switch_correct: u64,
    utterances: u64,
}

impl EvalAccumulator {
    pub fn add<H: Word>(&mut self, reference: &[TaggedToken], hypothesis: &[H]) {
        let alignment = align(reference, hypothesis);
        self.counts += alignment.counts();
        for (l, c) in language_counts(reference, &alignment) {
            *self.by_language.entry(l).or_default() += c;
        }
        let (correct, total) = switch_bigram_counts(reference, &alignment);
        self.switch_correct += correct;
        self.switch_total += total;
        self.utterances += 1;
    }

    pub fn merge(&mut self, other: &EvalAccumulator) {
        self.counts += other.counts;
        for (l, c) in &other.by_language {
            *self.by_language.entry(*l).or_default() += *c;
        }
        self.switch_correct += other.switch_correct;
        self.switch_total += other.switch_total;
        self.utterances += other.utterances;
    }

    pub fn report(&self) -> Result<EvalReport> {
        let mixed_wer = self.counts.rate().ok_or(Error::Empty("reference tokens"))?;
        Ok(EvalReport {
            mixed_wer,
            wer_by_language: self
                .by_language
                .iter()
                .filter_map(|(l, c)| c.rate().map(|r| (*l, r)))
                .collect(),
            csba: (self.switch_total > 0)
                .then(|| self.switch_correct as f64 / self.switch_total as f64),
            counts: self.counts,
            counts_by_language: self.by_language.clone(),
            switch_bigrams: self.switch_total,
            switch_bigrams_correct: self.switch_correct,
            utterances: self.utterances,
        })
    }
}

/// Pools counts over all pairs before dividing.
pub fn corpus_wer<H: Word>(pairs: &[(Vec<TaggedToken>, Vec<H>)]) -> Result<EvalReport> {
    let mut acc = EvalAccumulator::default();
    for (r, h) in pairs {
        acc.add(r, h);
    }
    acc.report()
}

/// Scores a hypothesis corpus against a reference corpus, pairing by
/// utterance id. Missing hypotheses score as empty.
pub fn evaluate_corpora(reference: &Corpus, hypothesis: &Corpus) -> Result<EvalReport> {
    let hyps: BTreeMap<&str, &[TaggedToken]> =
        hypothesis.iter().map(|u| (u.id(), u.tokens())).collect();
    let mut acc = EvalAccumulator::default();
    for u in reference {
        if !u.is_transcribed() {
            return Err(Error::Untranscribed(u.id().to_string()));
        }
        let empty: &[TaggedToken] = &[];
        acc.add(u.tokens(), hyps.get(u.id()).copied().unwrap_or(empty));
    }
    acc.report()
}

impl EvalReport {
    /// Flat JSON object with dotted keys; absent rates are `null`.
    pub fn to_flat_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("mixed_wer".into(), self.mixed_wer.into());
        for l in Language::ALL {
            m.insert(
                format!("wer_by_language.{l}"),
                self.wer_by_language
                    .get(&l)
                    .copied()
                    .map_or(Value::Null, Value::from),
            );
        }
        m.insert("csba".into(), self.csba.map_or(Value::Null, Value::from));
        m.insert("counts.sub".into(), self.counts.sub.into());
        m.insert("counts.del".into(), self.counts.del.into());
        m.insert("counts.ins".into(), self.counts.ins.into());
        m.insert("counts.ref_len".into(), self.counts.ref_len.into());
        Value::Object(m)
    }

    pub fn render_table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".into(), |x| format!("{:.1}", 100.0 * x));
        let mut out = format!("{:<10} {:>8}\n", "Mixed WER", pct(Some(self.mixed_wer)));
        for l in Language::ALL {
            if let Some(w) = self.wer_by_language.get(&l) {
                out.push_str(&format!(
                    "{:<10} {:>8}\n",
                    format!("WER {l}"),
                    pct(Some(*w))
                ));
            }
        }
        out.push_str(&format!("{:<10} {:>8}\n", "CSBA", pct(self.csba)));
        out.push_str(&format!(
            "S={} D={} I={} N={}\nnote: {}\n",
            self.counts.sub, self.counts.del, self.counts.ins, self.counts.ref_len, CSBA_DEFINITION
        ));
        out
    }
}
