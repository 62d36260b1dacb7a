//! Okapi BM25 over an in-memory inverted index.
//!
//! `idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1)`, which is strictly positive,
//! so every matching document scores above zero.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize_words;

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Posting {
    doc: u32,
    tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    sentences: Vec<String>,
    documents: Vec<Vec<String>>,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<usize>,
    avgdl: f64,
    k1: f64,
    b: f64,
}

impl Bm25Index {
    /// Builds an index with the default `k1 = 1.2`, `b = 0.75`.
    pub fn build<S: AsRef<str>>(corpus: &[S]) -> Result<Self> {
        Self::build_with(corpus, DEFAULT_K1, DEFAULT_B)
    }

    pub fn build_with<S: AsRef<str>>(corpus: &[S], k1: f64, b: f64) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidInput("cannot index an empty corpus".into()));
        }
        if !(k1 > 0.0 && k1.is_finite()) || !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidInput(format!("invalid BM25 parameters k1={k1}, b={b}")));
        }
        let sentences: Vec<String> = corpus.iter().map(|s| s.as_ref().to_string()).collect();
        let documents: Vec<Vec<String>> = sentences.iter().map(|s| tokenize_words(s)).collect();
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        for (doc, terms) in documents.iter().enumerate() {
            let mut counts: BTreeMap<&str, u32> = BTreeMap::new();
            for t in terms {
                *counts.entry(t).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term.to_string()).or_default().push(Posting {
                    doc: doc as u32,
                    tf,
                });
            }
        }
        let doc_lengths: Vec<usize> = documents.iter().map(Vec::len).collect();
        let avgdl = doc_lengths.iter().sum::<usize>() as f64 / documents.len() as f64;
        Ok(Self {
            sentences,
            documents,
            postings,
            doc_lengths,
            avgdl,
            k1,
            b,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn doc_lengths(&self) -> &[usize] {
        &self.doc_lengths
    }

    pub fn documents(&self) -> &[Vec<String>] {
        &self.documents
    }

    pub fn sentence(&self, doc: usize) -> Option<&str> {
        self.sentences.get(doc).map(String::as_str)
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.df(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Top `top_k` documents by BM25 score; zero scores are dropped and ties
    /// go to the lower document id. Repeated query terms count repeatedly.
    pub fn search<S: AsRef<str>>(&self, query: &[S], top_k: usize) -> Vec<(usize, f64)> {
        let mut scores = vec![0.0f64; self.num_docs()];
        let mut hit = vec![false; self.num_docs()];
        for term in query {
            let term = term.as_ref();
            let Some(postings) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(term);
            for p in postings {
                let d = p.doc as usize;
                let tf = p.tf as f64;
                let len = self.doc_lengths[d] as f64;
                let norm = tf + self.k1 * (1.0 - self.b + self.b * len / self.avgdl);
                scores[d] += idf * (tf * (self.k1 + 1.0)) / norm;
                hit[d] = true;
            }
        }
        let mut ranked: Vec<(usize, f64)> = scores
            .into_iter()
            .enumerate()
            .filter(|&(d, s)| hit[d] && s > 0.0)
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(top_k);
        ranked
    }

    /// Builds from a one-sentence-per-line file (blank and `#` lines skipped).
    pub fn build_from_file(path: &Path) -> Result<Self> {
        let lines: Vec<String> = crate::tsv::content_lines(path)?.into_iter().map(|(_, l)| l).collect();
        if lines.is_empty() {
            return Err(Error::parse(path, 0, "corpus file has no sentences"));
        }
        Self::build(&lines)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)
            .map_err(|e| Error::InvalidInput(format!("serializing index: {e}")))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const CORPUS: [&str; 3] = ["the dog barks", "cats chase the dog", "birds sing"];

    /// Full-formula scoring of every document, then a stable sort.
    fn oracle(docs: &[Vec<String>], query: &[String], top_k: usize) -> Vec<(usize, f64)> {
        let n = docs.len() as f64;
        let avgdl = docs.iter().map(|d| d.len() as f64).sum::<f64>() / n;
        let (k1, b) = (1.2, 0.75);
        let mut out = Vec::new();
        for (id, doc) in docs.iter().enumerate() {
            let mut score = 0.0;
            for q in query {
                let tf = doc.iter().filter(|t| *t == q).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = docs.iter().filter(|d| d.contains(q)).count() as f64;
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                score += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * doc.len() as f64 / avgdl));
            }
            if score > 0.0 {
                out.push((id, score));
            }
        }
        out.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap());
        out.truncate(top_k);
        out
    }

    #[test]
    fn build_statistics() {
        let idx = Bm25Index::build(&CORPUS).unwrap();
        assert_eq!(idx.num_docs(), 3);
        assert_eq!(idx.df("dog"), 2);
        assert_abs_diff_eq!(idx.avgdl(), 3.0);

        let single = Bm25Index::build(&["a b c d"]).unwrap();
        assert_abs_diff_eq!(single.avgdl(), 4.0);
        assert!(["a", "b", "c", "d"].iter().all(|t| single.df(t) == 1));

        let dup = Bm25Index::build(&["x y", "x y"]).unwrap();
        assert_eq!(dup.df("x"), 2);

        assert!(Bm25Index::build::<&str>(&[]).is_err());
        assert!(Bm25Index::build_with(&["a"], 0.0, 0.5).is_err());
        assert!(Bm25Index::build_with(&["a"], 1.0, 1.5).is_err());
    }

    #[test]
    fn search_matches_hand_values() {
        let idx = Bm25Index::build(&CORPUS).unwrap();
        let hits = idx.search(&["dog"], 10);
        assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), [0, 1]);
        // idf = ln(1.6); doc0 tf-part = 1.0, doc1 tf-part = 2.2 / 2.5
        assert_abs_diff_eq!(hits[0].1, 1.6f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(hits[1].1, 1.6f64.ln() * 0.88, epsilon = 1e-12);
        assert_abs_diff_eq!(hits[0].1, 0.4700, epsilon = 5e-5);
        assert_abs_diff_eq!(hits[1].1, 0.4136, epsilon = 5e-5);
        assert!(idx.search(&["unicorn"], 10).is_empty());
        assert_eq!(idx.search(&["dog"], 1).len(), 1);
    }

    #[test]
    fn identical_docs_tie_to_lower_id() {
        let idx = Bm25Index::build(&["red fox", "blue sky", "red fox"]).unwrap();
        let hits = idx.search(&["fox"], 5);
        assert_eq!(hits.iter().map(|h| h.0).collect::<Vec<_>>(), [0, 2]);
        assert_eq!(hits[0].1, hits[1].1);
    }

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("idx.json");
        let idx = Bm25Index::build(&CORPUS).unwrap();
        idx.save(&p).unwrap();
        assert_eq!(Bm25Index::load(&p).unwrap(), idx);
    }

    fn corpus_strategy() -> impl Strategy<Value = (Vec<Vec<String>>, Vec<String>)> {
        let word = prop_oneof![Just("a"), Just("b"), Just("c"), Just("d"), Just("e"), Just("f")]
            .prop_map(String::from);
        (
            proptest::collection::vec(proptest::collection::vec(word.clone(), 0..8), 1..50),
            proptest::collection::vec(word, 0..10),
        )
    }

    proptest! {
        #[test]
        fn search_equals_naive_oracle((docs, query) in corpus_strategy(), top_k in 1usize..60) {
            let sentences: Vec<String> = docs.iter().map(|d| d.join(" ")).collect();
            let idx = Bm25Index::build(&sentences).unwrap();
            let got = idx.search(&query, top_k);
            let want = oracle(&docs, &query, top_k);
            prop_assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                prop_assert_eq!(g.0, w.0);
                prop_assert!((g.1 - w.1).abs() <= 1e-12 * w.1.abs().max(1.0));
            }
        }

        #[test]
        fn extra_occurrence_never_lowers_single_term_score((docs, _q) in corpus_strategy(), pick in 0usize..50) {
            let d = pick % docs.len();
            let Some(term) = docs[d].first().cloned() else { return Ok(()); };
            let before = Bm25Index::build(&docs.iter().map(|d| d.join(" ")).collect::<Vec<_>>()).unwrap();
            let mut grown = docs.clone();
            grown[d].push(term.clone());
            let after = Bm25Index::build(&grown.iter().map(|d| d.join(" ")).collect::<Vec<_>>()).unwrap();
            let score = |idx: &Bm25Index| idx.search(&[term.as_str()], 100).into_iter().find(|h| h.0 == d).unwrap().1;
            prop_assert!(score(&after) >= score(&before));
        }

        #[test]
        fn repeating_a_query_term_never_lowers_scores((docs, query) in corpus_strategy()) {
            prop_assume!(!query.is_empty());
            let idx = Bm25Index::build(&docs.iter().map(|d| d.join(" ")).collect::<Vec<_>>()).unwrap();
            let mut longer = query.clone();
            longer.push(query[0].clone());
            let base = idx.search(&query, 100);
            let more = idx.search(&longer, 100);
            for (d, s) in base {
                let s2 = more.iter().find(|h| h.0 == d).unwrap().1;
                prop_assert!(s2 >= s);
            }
        }
    }
}
