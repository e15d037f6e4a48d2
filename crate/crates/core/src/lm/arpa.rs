//! Standard ARPA backoff n-gram text format: base-10 log probabilities
//! written with six decimal digits.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::model::{Backoff, BoundaryMode, Entry, Model, NGramLM};
use super::vocab::{Vocabulary, BOS, EOS};
use crate::error::{Error, Result};

const LOG_ZERO: f64 = -99.0;

fn log10(p: f64) -> f64 {
    if p <= 0.0 {
        LOG_ZERO
    } else {
        p.log10()
    }
}

fn pow10(l: f64) -> f64 {
    if l <= LOG_ZERO {
        0.0
    } else {
        10f64.powf(l)
    }
}

#[derive(Default)]
struct Keys {
    bigrams: BTreeSet<(u32, u32)>,
    trigrams: BTreeSet<(u32, u32, u32)>,
}

fn collect_keys(lm: &NGramLM, keys: &mut Keys) {
    match &lm.model {
        Model::Backoff(b) => {
            keys.bigrams.extend(b.bigrams.keys().copied());
            keys.trigrams.extend(b.trigrams.keys().copied());
        }
        Model::Mixture { first, second, .. } => {
            collect_keys(first, keys);
            collect_keys(second, keys);
        }
    }
}

/// Backoff tables equivalent to `lm` on every listed n-gram. Mixtures are
/// flattened statically: listed n-grams keep their exact mixed probability
/// and backoff weights renormalize the remaining mass.
pub(crate) fn backoff_tables(lm: &NGramLM) -> Backoff {
    if let Model::Backoff(b) = &lm.model {
        return b.clone();
    }
    let vocab = &lm.vocab;
    let mut keys = Keys::default();
    collect_keys(lm, &mut keys);
    for &(u, v, _) in &keys.trigrams {
        keys.bigrams.insert((u, v));
    }

    let mut unigrams: Vec<Entry> = (0..vocab.len() as u32 + 2)
        .map(|w| Entry {
            prob: if w == vocab.bos()
                || (w == vocab.eos() && lm.boundary == BoundaryMode::NoBoundary)
            {
                0.0
            } else {
                lm.prob_ids(&[], w)
            },
            bow: None,
        })
        .collect();

    let mut bigrams: HashMap<(u32, u32), Entry> = keys
        .bigrams
        .iter()
        .map(|&(v, w)| {
            (
                (v, w),
                Entry {
                    prob: lm.prob_ids(&[v], w),
                    bow: None,
                },
            )
        })
        .collect();
    let mut by_ctx: BTreeMap<u32, (f64, f64)> = BTreeMap::new();
    for &(v, w) in &keys.bigrams {
        let e = by_ctx.entry(v).or_default();
        e.0 += bigrams[&(v, w)].prob;
        e.1 += unigrams[w as usize].prob;
    }
    for (v, (num, den)) in by_ctx {
        unigrams[v as usize].bow = Some(renormalizer(num, den));
    }

    let trigrams: HashMap<(u32, u32, u32), f64> = keys
        .trigrams
        .iter()
        .map(|&(u, v, w)| ((u, v, w), lm.prob_ids(&[u, v], w)))
        .collect();
    let mut by_ctx: BTreeMap<(u32, u32), (f64, f64)> = BTreeMap::new();
    for &(u, v, w) in &keys.trigrams {
        let lower = match bigrams.get(&(v, w)) {
            Some(e) => e.prob,
            None => unigrams[v as usize].bow.unwrap_or(1.0) * unigrams[w as usize].prob,
        };
        let e = by_ctx.entry((u, v)).or_default();
        e.0 += trigrams[&(u, v, w)];
        e.1 += lower;
    }
    for (ctx, (num, den)) in by_ctx {
        bigrams.get_mut(&ctx).unwrap().bow = Some(renormalizer(num, den));
    }
    Backoff {
        unigrams,
        bigrams,
        trigrams,
    }
}

/// Backoff weight `(1 - listed mass) / (1 - lower-order mass of listed words)`.
fn renormalizer(listed: f64, lower: f64) -> f64 {
    let den = 1.0 - lower;
    if den <= 1e-12 {
        1.0
    } else {
        ((1.0 - listed) / den).max(0.0)
    }
}

pub fn write_arpa(lm: &NGramLM) -> String {
    let tables = backoff_tables(lm);
    let vocab = &lm.vocab;
    let mut unigram_ids: Vec<u32> = (0..vocab.len() as u32).collect();
    unigram_ids.push(vocab.bos());
    if lm.boundary == BoundaryMode::Sentence {
        unigram_ids.push(vocab.eos());
    }
    let mut bigram_keys: Vec<_> = tables.bigrams.keys().copied().collect();
    bigram_keys.sort_unstable();
    let mut trigram_keys: Vec<_> = tables.trigrams.keys().copied().collect();
    trigram_keys.sort_unstable();

    let mut out = String::new();
    out.push_str("\\data\\\n");
    let counts = [unigram_ids.len(), bigram_keys.len(), trigram_keys.len()];
    for (i, c) in counts.iter().enumerate().take(lm.order) {
        let _ = writeln!(out, "ngram {}={}", i + 1, c);
    }
    let bow_field = |bow: Option<f64>| match bow {
        Some(b) => format!("\t{:.6}", log10(b)),
        None => String::new(),
    };

    out.push_str("\n\\1-grams:\n");
    for id in unigram_ids {
        let e = tables.unigrams[id as usize];
        let bow = if lm.order > 1 { e.bow } else { None };
        let _ = writeln!(
            out,
            "{:.6}\t{}{}",
            log10(e.prob),
            vocab.word(id),
            bow_field(bow)
        );
    }
    if lm.order >= 2 {
        out.push_str("\n\\2-grams:\n");
        for (v, w) in bigram_keys {
            let e = tables.bigrams[&(v, w)];
            let bow = if lm.order > 2 { e.bow } else { None };
            let _ = writeln!(
                out,
                "{:.6}\t{} {}{}",
                log10(e.prob),
                vocab.word(v),
                vocab.word(w),
                bow_field(bow)
            );
        }
    }
    if lm.order >= 3 {
        out.push_str("\n\\3-grams:\n");
        for (u, v, w) in trigram_keys {
            let _ = writeln!(
                out,
                "{:.6}\t{} {} {}",
                log10(tables.trigrams[&(u, v, w)]),
                vocab.word(u),
                vocab.word(v),
                vocab.word(w)
            );
        }
    }
    out.push_str("\n\\end\\\n");
    out
}

pub fn save_arpa(lm: &NGramLM, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_arpa(lm)).map_err(|e| Error::io(path, e))
}

pub fn load_arpa(path: impl AsRef<Path>) -> Result<NGramLM> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_arpa(&text)
}

struct RawEntry {
    logp: f64,
    words: Vec<String>,
    bow: Option<f64>,
}

fn arpa_err(section: &str, message: impl Into<String>) -> Error {
    Error::Arpa {
        section: section.to_string(),
        message: message.into(),
    }
}

pub fn parse_arpa(text: &str) -> Result<NGramLM> {
    let mut lines = text.lines().map(str::trim).peekable();
    while let Some(l) = lines.peek() {
        if *l == "\\data\\" {
            break;
        }
        lines.next();
    }
    if lines.next() != Some("\\data\\") {
        return Err(arpa_err("\\data\\", "missing header"));
    }
    let mut declared: BTreeMap<usize, usize> = BTreeMap::new();
    while let Some(l) = lines.peek() {
        if l.is_empty() {
            lines.next();
            continue;
        }
        let Some(rest) = l.strip_prefix("ngram ") else {
            break;
        };
        let (n, c) = rest
            .split_once('=')
            .ok_or_else(|| arpa_err("\\data\\", format!("bad count line `{l}`")))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| arpa_err("\\data\\", format!("bad order in `{l}`")))?;
        let c: usize = c
            .trim()
            .parse()
            .map_err(|_| arpa_err("\\data\\", format!("bad count in `{l}`")))?;
        if !(1..=3).contains(&n) {
            return Err(arpa_err("\\data\\", format!("unsupported order {n}")));
        }
        declared.insert(n, c);
        lines.next();
    }
    if declared.is_empty() || declared.keys().copied().ne(1..=declared.len()) {
        return Err(arpa_err("\\data\\", "n-gram counts must cover orders 1..N"));
    }
    let order = declared.len();

    let mut sections: Vec<Vec<RawEntry>> = Vec::new();
    let mut ended = false;
    while let Some(l) = lines.next() {
        if l.is_empty() {
            continue;
        }
        if l == "\\end\\" {
            ended = true;
            break;
        }
        let n = sections.len() + 1;
        let header = format!("\\{n}-grams:");
        if l != header {
            return Err(arpa_err(l, format!("expected section {header}")));
        }
        let mut entries = Vec::new();
        while let Some(l) = lines.peek() {
            if l.starts_with('\\') {
                break;
            }
            let l = lines.next().unwrap();
            if l.is_empty() {
                continue;
            }
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields.len() != n + 1 && fields.len() != n + 2 {
                return Err(arpa_err(&header, format!("malformed entry `{l}`")));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .map_err(|_| arpa_err(&header, format!("bad number `{s}`")))
            };
            entries.push(RawEntry {
                logp: num(fields[0])?,
                words: fields[1..=n].iter().map(|s| s.to_string()).collect(),
                bow: fields.get(n + 1).map(|s| num(s)).transpose()?,
            });
        }
        if entries.len() != declared[&n] {
            return Err(arpa_err(
                &header,
                format!("declared {} entries, found {}", declared[&n], entries.len()),
            ));
        }
        sections.push(entries);
        if sections.len() > order {
            return Err(arpa_err(&header, "section beyond declared order"));
        }
    }
    if !ended {
        return Err(arpa_err("\\end\\", "missing end marker"));
    }
    if sections.len() != order {
        return Err(arpa_err(
            &format!("\\{}-grams:", sections.len() + 1),
            "missing section",
        ));
    }

    let words: Vec<&str> = sections[0]
        .iter()
        .map(|e| e.words[0].as_str())
        .filter(|w| *w != BOS && *w != EOS)
        .collect();
    let boundary = if sections[0].iter().any(|e| e.words[0] == EOS) {
        BoundaryMode::Sentence
    } else {
        BoundaryMode::NoBoundary
    };
    let vocab = Arc::new(Vocabulary::from_words(&words)?);
    let id = |w: &str, section: &str| {
        vocab
            .symbol_id(w)
            .ok_or_else(|| arpa_err(section, format!("word `{w}` missing from 1-grams")))
    };

    let mut unigrams = vec![
        Entry {
            prob: 0.0,
            bow: None
        };
        vocab.len() + 2
    ];
    for e in &sections[0] {
        let i = id(&e.words[0], "\\1-grams:")? as usize;
        unigrams[i] = Entry {
            prob: pow10(e.logp),
            bow: e.bow.map(pow10),
        };
    }
    let mut bigrams = HashMap::new();
    if let Some(entries) = sections.get(1) {
        for e in entries {
            let key = (
                id(&e.words[0], "\\2-grams:")?,
                id(&e.words[1], "\\2-grams:")?,
            );
            bigrams.insert(
                key,
                Entry {
                    prob: pow10(e.logp),
                    bow: e.bow.map(pow10),
                },
            );
        }
    }
    let mut trigrams = HashMap::new();
    if let Some(entries) = sections.get(2) {
        for e in entries {
            let key = (
                id(&e.words[0], "\\3-grams:")?,
                id(&e.words[1], "\\3-grams:")?,
                id(&e.words[2], "\\3-grams:")?,
            );
            trigrams.insert(key, pow10(e.logp));
        }
    }
    Ok(NGramLM {
        vocab,
        order,
        boundary,
        smoothing: "arpa".into(),
        model: Model::Backoff(Backoff {
            unigrams,
            bigrams,
            trigrams,
        }),
    })
}
