use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::corpus::{is_valid_surface, parse_duration, record_fields, BatchId};
use crate::error::{Error, Result};

/// Observed symbol sequence for one utterance; the true words are hidden.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub id: String,
    pub speaker: String,
    pub batch: BatchId,
    pub duration: f64,
    pub symbols: Vec<String>,
}

impl Observation {
    pub fn new(
        id: impl Into<String>,
        speaker: impl Into<String>,
        batch: BatchId,
        duration: f64,
        symbols: Vec<String>,
    ) -> Result<Self> {
        let id = id.into();
        if let Some(bad) = symbols.iter().find(|s| !is_valid_surface(s)) {
            return Err(Error::InvalidUtterance {
                id,
                message: format!("invalid symbol `{bad}`"),
            });
        }
        Ok(Observation {
            id,
            speaker: speaker.into(),
            batch,
            duration,
            symbols,
        })
    }
}

/// Ordered observation set with lookup by utterance id.
#[derive(Clone, Debug, Default)]
pub struct Observations {
    items: Vec<Observation>,
    index: HashMap<String, usize>,
}

impl Observations {
    pub fn new(items: Vec<Observation>) -> Result<Self> {
        let mut index = HashMap::with_capacity(items.len());
        for (i, o) in items.iter().enumerate() {
            if index.insert(o.id.clone(), i).is_some() {
                return Err(Error::DuplicateUtterance(o.id.clone()));
            }
        }
        Ok(Observations { items, index })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation> {
        self.items.iter()
    }

    pub fn as_slice(&self) -> &[Observation] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&Observation> {
        self.index.get(id).map(|&i| &self.items[i])
    }

    pub fn extend(&mut self, other: &Observations) -> Result<()> {
        for o in other.iter() {
            if self.index.contains_key(&o.id) {
                return Err(Error::DuplicateUtterance(o.id.clone()));
            }
            self.index.insert(o.id.clone(), self.items.len());
            self.items.push(o.clone());
        }
        Ok(())
    }

    pub fn filter(&self, mut keep: impl FnMut(&Observation) -> bool) -> Observations {
        Observations::new(self.items.iter().filter(|o| keep(o)).cloned().collect())
            .expect("subset keeps ids unique")
    }
}

impl<'a> IntoIterator for &'a Observations {
    type Item = &'a Observation;
    type IntoIter = std::slice::Iter<'a, Observation>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}

/// Parses the tab-separated observation format:
/// `id  speaker  batch  duration  symbols`.
pub fn parse_observations(text: &str) -> Result<Observations> {
    let mut items = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let Some(f) = record_fields(raw) else {
            continue;
        };
        if f.len() != 5 {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 tab-separated fields, found {}", f.len()),
            });
        }
        let symbols: Vec<String> = f[4].split_whitespace().map(str::to_string).collect();
        if symbols.is_empty() || f[4] == "-" {
            return Err(Error::Parse {
                line,
                message: "observation has no symbols".into(),
            });
        }
        let duration = parse_duration(f[3], line)?;
        let o =
            Observation::new(f[0], f[1], BatchId::new(f[2]), duration, symbols).map_err(|e| {
                Error::Parse {
                    line,
                    message: e.to_string(),
                }
            })?;
        items.push(o);
    }
    Observations::new(items)
}

pub fn format_observations(obs: &Observations) -> String {
    let mut out = String::new();
    for o in obs {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            o.id,
            o.speaker,
            o.batch,
            o.duration,
            o.symbols.join(" ")
        ));
    }
    out
}

pub fn load_observations(path: impl AsRef<Path>) -> Result<Observations> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_observations(&text)
}

pub fn save_observations(obs: &Observations, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_observations(obs)).map_err(|e| Error::io(path, e))
}
