use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;

use crate::corpus::{Language, TaggedToken};
use crate::error::{Error, Result};
use crate::lm::Vocabulary;

/// Tagged word list with a nearest-neighbour index by character edit
/// distance. Neighbour lists are sorted by distance, then surface.
#[derive(Debug)]
pub struct Lexicon {
    vocab: Arc<Vocabulary>,
    tags: Vec<Language>,
    chars: Vec<Vec<char>>,
    by_len: BTreeMap<usize, Vec<u32>>,
    depth: usize,
    table: Vec<Arc<[u32]>>,
    foreign: RwLock<HashMap<String, Arc<[u32]>>>,
    reverse: RwLock<HashMap<usize, Arc<Vec<Vec<u32>>>>>,
}

impl Lexicon {
    /// Builds the index, keeping `depth` nearest entries per symbol. Every
    /// word needs a language; homographs take their first language.
    pub fn new(vocab: Arc<Vocabulary>, depth: usize) -> Result<Self> {
        if vocab.is_empty() {
            return Err(Error::Empty("lexicon"));
        }
        if depth == 0 {
            return Err(Error::InvalidParameter(
                "lexicon depth must be positive".into(),
            ));
        }
        let mut tags = Vec::with_capacity(vocab.len());
        let mut chars = Vec::with_capacity(vocab.len());
        let mut by_len: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for (i, w) in vocab.words().enumerate() {
            let lang = vocab
                .languages_of(w)
                .and_then(|ls| ls.iter().next().copied())
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("lexicon word `{w}` has no language"))
                })?;
            tags.push(lang);
            let cs: Vec<char> = w.chars().collect();
            by_len.entry(cs.len()).or_default().push(i as u32);
            chars.push(cs);
        }
        let mut lex = Lexicon {
            vocab,
            tags,
            chars,
            by_len,
            depth,
            table: Vec::new(),
            foreign: RwLock::new(HashMap::new()),
            reverse: RwLock::new(HashMap::new()),
        };
        let table: Vec<Arc<[u32]>> = (0..lex.chars.len())
            .into_par_iter()
            .map(|i| lex.search(&lex.chars[i]).into())
            .collect();
        lex.table = table;
        Ok(lex)
    }

    pub fn from_tagged<'a>(
        tokens: impl IntoIterator<Item = &'a TaggedToken>,
        depth: usize,
    ) -> Result<Self> {
        Self::new(Arc::new(Vocabulary::from_tagged(tokens)), depth)
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn word(&self, id: u32) -> &str {
        self.vocab.word(id)
    }

    pub fn tag(&self, id: u32) -> Language {
        self.tags[id as usize]
    }

    pub fn id(&self, surface: &str) -> Option<u32> {
        self.vocab.id(surface)
    }

    pub fn token(&self, id: u32) -> TaggedToken {
        TaggedToken::new(self.word(id), self.tag(id)).expect("lexicon words are valid tokens")
    }

    /// The `depth` entries nearest to `symbol`, the symbol itself first when
    /// it is in the lexicon.
    pub fn nearest(&self, symbol: &str) -> Arc<[u32]> {
        if let Some(id) = self.vocab.id(symbol) {
            return self.table[id as usize].clone();
        }
        if let Some(hit) = self.foreign.read().expect("cache lock").get(symbol) {
            return hit.clone();
        }
        let cs: Vec<char> = symbol.chars().collect();
        let found: Arc<[u32]> = self.search(&cs).into();
        self.foreign
            .write()
            .expect("cache lock")
            .entry(symbol.to_string())
            .or_insert(found)
            .clone()
    }

    /// Up to `k` nearest other entries of an in-lexicon word.
    pub fn neighbours(&self, id: u32, k: usize) -> &[u32] {
        let row = &self.table[id as usize];
        &row[1..row.len().min(k + 1)]
    }

    /// For each entry `o`, the words that list `o` among their `k` nearest
    /// neighbours, in id order.
    pub fn confusers(&self, k: usize) -> Arc<Vec<Vec<u32>>> {
        if let Some(hit) = self.reverse.read().expect("cache lock").get(&k) {
            return hit.clone();
        }
        let mut rev = vec![Vec::new(); self.len()];
        for w in 0..self.len() as u32 {
            for &o in self.neighbours(w, k) {
                rev[o as usize].push(w);
            }
        }
        self.reverse
            .write()
            .expect("cache lock")
            .entry(k)
            .or_insert_with(|| Arc::new(rev))
            .clone()
    }

    fn search(&self, query: &[char]) -> Vec<u32> {
        let want = self.depth.min(self.len());
        // (distance, id); ids follow surface order.
        let mut best: Vec<(usize, u32)> = Vec::with_capacity(want + 1);
        let n = query.len();
        let mut lengths: Vec<usize> = self.by_len.keys().copied().collect();
        lengths.sort_by_key(|&l| (l.abs_diff(n), l));
        for l in lengths {
            if best.len() == want && l.abs_diff(n) > best[want - 1].0 {
                break;
            }
            for &id in &self.by_len[&l] {
                let d = crate::edit::edit_distance(query, &self.chars[id as usize]);
                if best.len() == want && (d, id) >= best[want - 1] {
                    continue;
                }
                let pos = best.partition_point(|e| *e < (d, id));
                best.insert(pos, (d, id));
                best.truncate(want);
            }
        }
        best.into_iter().map(|(_, id)| id).collect()
    }
}
