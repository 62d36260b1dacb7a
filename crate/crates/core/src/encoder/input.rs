use serde::{Deserialize, Serialize};

use crate::encoder::vocab::{Vocab, CLS_ID, SEP_ID};
use crate::error::{Error, Result};
use crate::knowledge::KnowledgeSet;
use crate::text::tokenize_words;

/// Which part of the fused sequence a position belongs to.
/// Knowledge segments are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Segment {
    Query,
    Knowledge(usize),
}

/// `[CLS] q c [SEP] s_1 [SEP] ... s_K [SEP]` as ids plus segment labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusedInput {
    token_ids: Vec<u32>,
    segments: Vec<Segment>,
    /// `(query position, knowledge segment)` for each linked snippet.
    link_starts: Vec<(usize, Segment)>,
}

impl FusedInput {
    /// Validates the layout invariants.
    pub fn new(
        token_ids: Vec<u32>,
        segments: Vec<Segment>,
        link_starts: Vec<(usize, Segment)>,
    ) -> Result<Self> {
        if token_ids.len() != segments.len() {
            return Err(Error::InvalidInput(format!(
                "{} token ids but {} segment labels",
                token_ids.len(),
                segments.len()
            )));
        }
        if segments.first() != Some(&Segment::Query) {
            return Err(Error::InvalidInput("position 0 must be in the query segment".into()));
        }
        let mut expected_next = 1;
        for w in segments.windows(2) {
            match (w[0], w[1]) {
                (a, b) if a == b => {}
                (Segment::Query, Segment::Knowledge(i)) | (Segment::Knowledge(_), Segment::Knowledge(i))
                    if i == expected_next =>
                {
                    expected_next += 1;
                }
                (a, b) => {
                    return Err(Error::InvalidInput(format!(
                        "segment {b:?} cannot follow {a:?}"
                    )))
                }
            }
        }
        let query_len = segments.iter().take_while(|s| **s == Segment::Query).count();
        for &(pos, seg) in &link_starts {
            if pos >= query_len || !matches!(seg, Segment::Knowledge(i) if i < expected_next) {
                return Err(Error::InvalidInput(format!("bad link start ({pos}, {seg:?})")));
            }
        }
        Ok(Self {
            token_ids,
            segments,
            link_starts,
        })
    }

    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    pub fn token_ids(&self) -> &[u32] {
        &self.token_ids
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn link_starts(&self) -> &[(usize, Segment)] {
        &self.link_starts
    }

    pub fn num_knowledge(&self) -> usize {
        match self.segments.last() {
            Some(Segment::Knowledge(k)) => *k,
            _ => 0,
        }
    }

    pub fn query_len(&self) -> usize {
        self.segments
            .iter()
            .take_while(|s| **s == Segment::Query)
            .count()
    }

    pub fn segment_range(&self, seg: Segment) -> std::ops::Range<usize> {
        let start = self.segments.iter().position(|s| *s == seg).unwrap_or(self.len());
        let len = self.segments[start..].iter().take_while(|s| **s == seg).count();
        start..start + len
    }

    /// Replaces the token at `pos`, keeping the layout.
    pub fn with_token(&self, pos: usize, id: u32) -> Self {
        let mut out = self.clone();
        out.token_ids[pos] = id;
        out
    }
}

/// Lays out the fused sequence, dropping whole snippets from the end and then
/// tail-truncating the query pair until it fits in `max_len`.
pub fn build_input<S: AsRef<str>, T: AsRef<str>>(
    vocab: &Vocab,
    query_tokens: &[S],
    candidate_tokens: &[T],
    snippets: &KnowledgeSet,
    max_len: usize,
) -> Result<FusedInput> {
    if max_len < 2 {
        return Err(Error::InvalidInput(format!("max_len {max_len} < 2")));
    }
    let mut pair: Vec<u32> = vocab.ids_of(query_tokens);
    pair.extend(vocab.ids_of(candidate_tokens));
    let mut bodies: Vec<Vec<u32>> = snippets
        .iter()
        .map(|s| vocab.ids_of(&tokenize_words(&s.text)))
        .collect();
    let snippet_cost = |b: &[Vec<u32>]| b.iter().map(|s| s.len() + 1).sum::<usize>();
    while !bodies.is_empty() && 2 + pair.len() + snippet_cost(&bodies) > max_len {
        bodies.pop();
    }
    if 2 + pair.len() > max_len {
        pair.truncate(max_len - 2);
    }

    let mut token_ids = Vec::with_capacity(max_len);
    let mut segments = Vec::with_capacity(max_len);
    token_ids.push(CLS_ID);
    token_ids.extend(&pair);
    token_ids.push(SEP_ID);
    segments.resize(token_ids.len(), Segment::Query);

    let mut link_starts = Vec::new();
    for (i, body) in bodies.iter().enumerate() {
        let seg = Segment::Knowledge(i + 1);
        token_ids.extend(body);
        token_ids.push(SEP_ID);
        segments.resize(token_ids.len(), seg);
        if let Some((start, _)) = snippets.snippets()[i].linked_span {
            if start < pair.len() {
                link_starts.push((start + 1, seg));
            }
        }
    }
    FusedInput::new(token_ids, segments, link_starts)
}
