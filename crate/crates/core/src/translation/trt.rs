use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hardness::{rank_by_hardness, select_top_n, WordScorer};
use crate::knowledge::{
    generate_knowledge, lookup_definition, retrieve_triplets_linked, Bm25Index, DictionaryStore,
    GenerativeClient, KnowledgeSet, KnowledgeSnippet, KnowledgeSource, TripletStore, NO_KNOWLEDGE,
};
use crate::text::{content_words, tokenize, tokenize_words, Lemmatizer, PosLexicon, Token};
use crate::translation::{LangTag, Translator};

pub struct GenerativeRetriever {
    pub client: Arc<dyn GenerativeClient>,
    pub examples: Vec<(String, String)>,
}

/// The English stores plus the text tools needed to query them. A source
/// enabled in [`RetrievalConfig`] must have its store here.
pub struct Retrievers {
    pub lexicon: Arc<PosLexicon>,
    pub lemmatizer: Arc<Lemmatizer>,
    pub scorer: Arc<dyn WordScorer>,
    pub dictionary: Option<Arc<DictionaryStore>>,
    pub triplets: Option<Arc<TripletStore>>,
    pub corpus: Option<Arc<Bm25Index>>,
    pub generative: Option<GenerativeRetriever>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    pub sources: Vec<KnowledgeSource>,
    /// Number of hardness-selected words whose definitions are retrieved.
    pub defs_n: usize,
    pub corpus_top_k: usize,
    /// Maximum number of snippets kept (K).
    pub capacity: usize,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            sources: vec![KnowledgeSource::Dictionary],
            defs_n: 6,
            corpus_top_k: 1,
            capacity: 16,
        }
    }
}

impl RetrievalConfig {
    fn enabled(&self, source: KnowledgeSource) -> bool {
        self.sources.contains(&source)
    }
}

fn missing(source: &str) -> Error {
    Error::InvalidInput(format!("{source} retrieval is enabled but no {source} store is loaded"))
}

/// Start of the first occurrence of `needle` in `tokens`.
fn find_span(tokens: &[Token], needle: &[String]) -> Option<(usize, usize)> {
    if needle.is_empty() || needle.len() > tokens.len() {
        return None;
    }
    (0..=tokens.len() - needle.len())
        .find(|&i| needle.iter().zip(&tokens[i..]).all(|(n, t)| *n == t.surface))
        .map(|i| (i, i + needle.len()))
}

fn dictionary_snippets(
    store: &DictionaryStore,
    tokens: &[Token],
    concepts: &[String],
    r: &Retrievers,
    config: &RetrievalConfig,
) -> Result<Vec<KnowledgeSnippet>> {
    let mut out = Vec::new();
    if !concepts.is_empty() {
        for concept in concepts {
            let words = tokenize_words(concept);
            let Some(last) = words.last() else { continue };
            let key = words.join(" ");
            let pos = r.lexicon.resolve(last, &r.lemmatizer);
            if let Some(mut s) = lookup_definition(store, &key, pos, &r.lemmatizer) {
                s.linked_span = find_span(tokens, &words);
                out.push(s);
            }
        }
        return Ok(out);
    }
    let cws = content_words(tokens, &r.lexicon, &r.lemmatizer);
    let indices: Vec<usize> = cws.iter().map(|c| c.index).collect();
    let scores = r.scorer.score(tokens, &indices)?;
    let selected: HashSet<usize> = select_top_n(&scores, config.defs_n).into_iter().collect();
    for ws in rank_by_hardness(&scores) {
        if !selected.contains(&ws.token_index) {
            continue;
        }
        let cw = cws.iter().find(|c| c.index == ws.token_index).expect("scored index");
        if let Some(s) = lookup_definition(store, &cw.surface, cw.pos, &r.lemmatizer) {
            out.push(s.with_span(cw.index, cw.index + 1));
        }
    }
    Ok(out)
}

fn triplet_words(tokens: &[Token], concepts: &[String], r: &Retrievers) -> Vec<(String, Option<(usize, usize)>)> {
    let mut words: Vec<(String, Option<(usize, usize)>)> = Vec::new();
    let mut push = |w: String, span| {
        if !words.iter().any(|(x, _)| *x == w) {
            words.push((w, span));
        }
    };
    if !concepts.is_empty() {
        for concept in concepts {
            let toks = tokenize_words(concept);
            let lemmas: Vec<String> = toks
                .iter()
                .map(|t| r.lemmatizer.lemmatize(t, r.lexicon.resolve(t, &r.lemmatizer)))
                .collect();
            if !lemmas.is_empty() {
                push(lemmas.join("_"), find_span(tokens, &toks));
            }
        }
        return words;
    }
    let cws = content_words(tokens, &r.lexicon, &r.lemmatizer);
    let lemmas: Vec<String> = cws
        .iter()
        .map(|c| r.lemmatizer.lemmatize(&c.surface, c.pos))
        .collect();
    for (c, l) in cws.iter().zip(&lemmas) {
        push(l.clone(), Some((c.index, c.index + 1)));
    }
    for i in 1..cws.len() {
        if cws[i].index == cws[i - 1].index + 1 {
            let span = (cws[i - 1].index, cws[i].index + 1);
            push(format!("{}_{}", lemmas[i - 1], lemmas[i]), Some(span));
        }
    }
    words
}

/// Runs the enabled English retrievers on an English query and assembles
/// the snippets in source order: dictionary (hardest word first), triplets,
/// corpus, generative.
///
/// When `concepts` is non-empty the dictionary and triplet lookups use
/// exactly those phrases instead of the query's content words.
pub fn retrieve(
    query: &str,
    concepts: &[String],
    r: &Retrievers,
    config: &RetrievalConfig,
) -> Result<KnowledgeSet> {
    let mut set = KnowledgeSet::new(config.capacity)?;
    let tokens = tokenize(query);
    let mut snippets = Vec::new();
    if config.enabled(KnowledgeSource::Dictionary) {
        let store = r.dictionary.as_deref().ok_or_else(|| missing("dictionary"))?;
        snippets.extend(dictionary_snippets(store, &tokens, concepts, r, config)?);
    }
    if config.enabled(KnowledgeSource::Triplet) {
        let store = r.triplets.as_deref().ok_or_else(|| missing("triplet"))?;
        snippets.extend(retrieve_triplets_linked(store, &triplet_words(&tokens, concepts, r)));
    }
    if config.enabled(KnowledgeSource::Corpus) {
        let index = r.corpus.as_deref().ok_or_else(|| missing("corpus"))?;
        let terms: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        for (doc, score) in index.search(&terms, config.corpus_top_k) {
            let text = index.sentence(doc).unwrap_or_default();
            snippets.push(KnowledgeSnippet::new(KnowledgeSource::Corpus, text).with_score(score));
        }
    }
    if config.enabled(KnowledgeSource::Generative) {
        let g = r.generative.as_ref().ok_or_else(|| missing("generative"))?;
        let s = generate_knowledge(g.client.as_ref(), &g.examples, query)?;
        if s.text != NO_KNOWLEDGE {
            snippets.push(s);
        }
    }
    let mut seen = HashSet::new();
    for s in snippets {
        if set.is_full() {
            break;
        }
        if seen.insert(s.text.clone()) {
            set.push(s);
        }
    }
    Ok(set)
}

/// [`trt_retrieve_with_concepts`] without concept phrases.
pub fn trt_retrieve(
    query: &str,
    lang: LangTag,
    translator: &dyn Translator,
    r: &Retrievers,
    config: &RetrievalConfig,
) -> Result<KnowledgeSet> {
    trt_retrieve_with_concepts(query, &[], lang, translator, r, config)
}

/// Translates `query` (and `concepts`) to English, retrieves, and translates
/// every snippet back into `lang`. Linked spans are mapped back through the
/// translator's token alignment; without one they cover the whole query.
pub fn trt_retrieve_with_concepts(
    query: &str,
    concepts: &[String],
    lang: LangTag,
    translator: &dyn Translator,
    r: &Retrievers,
    config: &RetrievalConfig,
) -> Result<KnowledgeSet> {
    if lang == LangTag::En {
        return retrieve(query, concepts, r, config);
    }
    let forward = translator.translate_aligned(query, lang, LangTag::En)?;
    let concepts_en = concepts
        .iter()
        .map(|c| translator.translate(c, lang, LangTag::En))
        .collect::<Result<Vec<_>>>()?;
    let mut set = retrieve(&forward.text, &concepts_en, r, config)?;
    let n_src = tokenize(query).len();
    for s in set.snippets_mut() {
        s.text = translator.translate(&s.text, LangTag::En, lang)?;
        if let Some((start, end)) = s.linked_span {
            s.linked_span = match forward.alignment.as_deref().and_then(|a| a.get(start..end)) {
                Some(src) if !src.is_empty() => {
                    let lo = *src.iter().min().expect("non-empty");
                    let hi = *src.iter().max().expect("non-empty");
                    Some((lo, hi + 1))
                }
                _ if n_src > 0 => Some((0, n_src)),
                _ => None,
            };
        }
    }
    Ok(set)
}
