//! English knowledge sources behind a common snippet type.

mod bm25;
mod dictionary;
mod generative;
mod triplets;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bm25::{Bm25Index, DEFAULT_B, DEFAULT_K1};
pub use dictionary::{lookup_definition, DictionaryStore};
pub use generative::{
    build_prompt, generate_knowledge, load_prompt_examples, GenerativeClient, HttpCompletionClient, HttpCompletionConfig,
    StubGenerativeClient, NO_KNOWLEDGE,
};
pub use triplets::{retrieve_triplets, retrieve_triplets_linked, RelationSurfaces, Triple, TripletStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KnowledgeSource {
    Dictionary,
    Triplet,
    Corpus,
    Generative,
}

/// One retrieved unit of knowledge.
///
/// `linked_span` is a half-open `[start, end)` token range into the query-pair
/// token sequence (question tokens followed by candidate tokens).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeSnippet {
    pub source: KnowledgeSource,
    pub text: String,
    pub linked_span: Option<(usize, usize)>,
    pub score: Option<f64>,
}

impl KnowledgeSnippet {
    pub fn new(source: KnowledgeSource, text: impl Into<String>) -> Self {
        Self {
            source,
            text: text.into(),
            linked_span: None,
            score: None,
        }
    }

    pub fn with_span(mut self, start: usize, end: usize) -> Self {
        self.linked_span = Some((start, end));
        self
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }
}

/// Ordered, capacity-bounded list of snippets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeSet {
    snippets: Vec<KnowledgeSnippet>,
    capacity: usize,
}

impl KnowledgeSet {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidInput("knowledge capacity must be positive".into()));
        }
        Ok(Self {
            snippets: Vec::new(),
            capacity,
        })
    }

    pub fn empty() -> Self {
        Self {
            snippets: Vec::new(),
            capacity: usize::MAX,
        }
    }

    /// Appends `snippet` unless the set is full or its text is blank.
    /// Returns whether it was stored.
    pub fn push(&mut self, snippet: KnowledgeSnippet) -> bool {
        if self.snippets.len() >= self.capacity || snippet.text.trim().is_empty() {
            return false;
        }
        self.snippets.push(snippet);
        true
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.snippets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snippets.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.snippets.len() >= self.capacity
    }

    pub fn snippets(&self) -> &[KnowledgeSnippet] {
        &self.snippets
    }

    pub fn snippets_mut(&mut self) -> &mut [KnowledgeSnippet] {
        &mut self.snippets
    }

    pub fn iter(&self) -> std::slice::Iter<'_, KnowledgeSnippet> {
        self.snippets.iter()
    }
}

impl<'a> IntoIterator for &'a KnowledgeSet {
    type Item = &'a KnowledgeSnippet;
    type IntoIter = std::slice::Iter<'a, KnowledgeSnippet>;

    fn into_iter(self) -> Self::IntoIter {
        self.snippets.iter()
    }
}
