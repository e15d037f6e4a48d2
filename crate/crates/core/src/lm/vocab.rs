use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::corpus::{is_valid_surface, Language, TaggedToken};
use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

/// Anything that can be scored by a language model as a word.
pub trait Word {
    fn surface(&self) -> &str;
}

impl Word for String {
    fn surface(&self) -> &str {
        self
    }
}

impl Word for &str {
    fn surface(&self) -> &str {
        self
    }
}

impl Word for TaggedToken {
    fn surface(&self) -> &str {
        TaggedToken::surface(self)
    }
}

/// Closed word list. Ids `0..len()` are words in sorted order; the sentence
/// boundary symbols take the two ids after them.
#[derive(Clone, Debug, Default)]
pub struct Vocabulary {
    words: Vec<String>,
    langs: Vec<BTreeSet<Language>>,
    index: HashMap<String, u32>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
    }
}

impl Vocabulary {
    pub fn from_tagged<'a>(tokens: impl IntoIterator<Item = &'a TaggedToken>) -> Self {
        let mut map: BTreeMap<String, BTreeSet<Language>> = BTreeMap::new();
        for t in tokens {
            map.entry(t.surface().to_string())
                .or_default()
                .insert(t.lang());
        }
        Self::from_map(map)
    }

    /// Untagged word list, as read back from an ARPA file.
    pub fn from_words<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut map: BTreeMap<String, BTreeSet<Language>> = BTreeMap::new();
        for w in words {
            let w = w.as_ref();
            if !is_valid_surface(w) || w == BOS || w == EOS {
                return Err(Error::InvalidToken(w.to_string()));
            }
            map.entry(w.to_string()).or_default();
        }
        Ok(Self::from_map(map))
    }

    fn from_map(map: BTreeMap<String, BTreeSet<Language>>) -> Self {
        let (words, langs): (Vec<_>, Vec<_>) = map.into_iter().unzip();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocabulary {
            words,
            langs,
            index,
        }
    }

    /// Words tagged with at least one of `languages`.
    pub fn restrict(&self, languages: &BTreeSet<Language>) -> Self {
        let map = self
            .words
            .iter()
            .zip(&self.langs)
            .filter_map(|(w, ls)| {
                let kept: BTreeSet<Language> = ls.intersection(languages).copied().collect();
                (!kept.is_empty()).then(|| (w.clone(), kept))
            })
            .collect();
        Self::from_map(map)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.index.contains_key(surface)
    }

    pub fn id(&self, surface: &str) -> Option<u32> {
        self.index.get(surface).copied()
    }

    pub(crate) fn bos(&self) -> u32 {
        self.words.len() as u32
    }

    pub(crate) fn eos(&self) -> u32 {
        self.words.len() as u32 + 1
    }

    /// Id of a word, `<s>` or `</s>`.
    pub(crate) fn symbol_id(&self, surface: &str) -> Option<u32> {
        match surface {
            BOS => Some(self.bos()),
            EOS => Some(self.eos()),
            w => self.id(w),
        }
    }

    pub fn word(&self, id: u32) -> &str {
        let n = self.words.len() as u32;
        match id {
            i if i < n => &self.words[i as usize],
            i if i == n => BOS,
            _ => EOS,
        }
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Languages a surface is tagged with (empty for untagged vocabularies).
    pub fn languages_of(&self, surface: &str) -> Option<&BTreeSet<Language>> {
        self.id(surface).map(|i| &self.langs[i as usize])
    }

    pub fn language_words(&self, lang: Language) -> impl Iterator<Item = &str> {
        self.words
            .iter()
            .zip(&self.langs)
            .filter(move |(_, ls)| ls.contains(&lang))
            .map(|(w, _)| w.as_str())
    }

    /// Every (surface, language) pair, ordered by surface then language.
    pub fn tagged_entries(&self) -> Vec<TaggedToken> {
        self.words
            .iter()
            .zip(&self.langs)
            .flat_map(|(w, ls)| ls.iter().map(move |l| TaggedToken::new(w.clone(), *l)))
            .collect::<Result<_>>()
            .expect("vocabulary surfaces are valid tokens")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_tokens;

    #[test]
    fn shared_surface_keeps_both_languages() {
        let toks = parse_tokens("a_E a_Z b_Z").unwrap();
        let v = Vocabulary::from_tagged(&toks);
        assert_eq!(v.len(), 2);
        assert_eq!(v.languages_of("a").unwrap().len(), 2);
        assert_eq!(v.tagged_entries().len(), 3);
        let e = v.restrict(&[Language::English].into());
        assert_eq!(e.words().collect::<Vec<_>>(), vec!["a"]);
        assert_eq!(v.word(v.bos()), BOS);
        assert_eq!(v.word(v.eos()), EOS);
    }

    #[test]
    fn boundary_symbols_are_not_words() {
        assert!(Vocabulary::from_words(["a", "<s>"]).is_err());
    }
}
