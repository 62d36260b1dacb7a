use std::collections::HashMap;
use std::path::Path;

use crate::error::Result;
use crate::knowledge::{KnowledgeSnippet, KnowledgeSource};
use crate::text::{Lemmatizer, Pos};
use crate::tsv;

/// Word to ordered definitions, first entry is the primary sense.
#[derive(Debug, Clone, Default)]
pub struct DictionaryStore {
    entries: HashMap<String, Vec<String>>,
}

impl DictionaryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, definition: &str) {
        let definition = definition.trim();
        if definition.is_empty() {
            return;
        }
        self.entries
            .entry(word.trim().to_lowercase())
            .or_default()
            .push(definition.to_string());
    }

    pub fn from_pairs<I, S, T>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut store = Self::new();
        for (w, d) in pairs {
            store.insert(w.as_ref(), d.as_ref());
        }
        store
    }

    /// Loads `word<TAB>definition` lines; repeated words append senses in file order.
    pub fn load(path: &Path) -> Result<Self> {
        let mut store = Self::new();
        for (line_no, line) in tsv::content_lines(path)? {
            let f = tsv::fields(path, line_no, &line, 2)?;
            store.insert(f[0], f[1]);
        }
        Ok(store)
    }

    pub fn definitions(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn first_definition(&self, word: &str) -> Option<&str> {
        self.entries
            .get(word)
            .and_then(|d| d.first())
            .map(String::as_str)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// First definition of `word`, falling back to its lemma. Snippet text is
/// `"<headword> : <definition>"` where the headword is the key actually found.
pub fn lookup_definition(
    store: &DictionaryStore,
    word: &str,
    pos: Pos,
    lemmatizer: &Lemmatizer,
) -> Option<KnowledgeSnippet> {
    let hit = |w: &str| {
        store
            .first_definition(w)
            .map(|d| KnowledgeSnippet::new(KnowledgeSource::Dictionary, format!("{w} : {d}")))
    };
    hit(word).or_else(|| {
        let lemma = lemmatizer.lemmatize(word, pos);
        if lemma == word {
            None
        } else {
            hit(&lemma)
        }
    })
}
