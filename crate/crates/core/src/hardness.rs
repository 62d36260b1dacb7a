//! Picking the "hard" content words whose definitions get retrieved.
//!
//! A scorer assigns each candidate word the probability a model would give
//! it at its own position; the lowest-probability words are the hardest.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::encoder::{mlm_distribution, EncoderParams, Vocab};
use crate::error::{Error, Result};
use crate::text::Token;
use crate::tsv;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordScore {
    pub token_index: usize,
    pub probability: f64,
}

pub trait WordScorer: Send + Sync {
    fn score(&self, tokens: &[Token], candidates: &[usize]) -> Result<Vec<WordScore>>;
}

/// Unigram relative frequency as a stand-in for model probability.
/// Unseen words get `1 / (total + smoothing_vocab)`.
#[derive(Debug, Clone)]
pub struct FrequencyScorer {
    counts: HashMap<String, u64>,
    total: u64,
    smoothing_vocab: u64,
}

impl FrequencyScorer {
    /// `smoothing_vocab` defaults to the number of table entries when `None`.
    pub fn new<I, S>(counts: I, smoothing_vocab: Option<u64>) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut table = HashMap::new();
        for (w, c) in counts {
            if c == 0 {
                return Err(Error::InvalidInput(format!(
                    "unigram count for `{}` must be positive",
                    w.as_ref()
                )));
            }
            *table.entry(w.as_ref().to_lowercase()).or_insert(0) += c;
        }
        let total = table.values().sum();
        let smoothing_vocab = smoothing_vocab.unwrap_or(table.len() as u64).max(1);
        Ok(Self {
            counts: table,
            total,
            smoothing_vocab,
        })
    }

    /// Loads a `word<TAB>count` table.
    pub fn load(path: &Path, smoothing_vocab: Option<u64>) -> Result<Self> {
        let mut pairs = Vec::new();
        for (line_no, line) in tsv::content_lines(path)? {
            let f = tsv::fields(path, line_no, &line, 2)?;
            let count: u64 = f[1]
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad count `{}`", f[1])))?;
            pairs.push((f[0].to_string(), count));
        }
        Self::new(pairs, smoothing_vocab)
    }

    pub fn probability(&self, word: &str) -> f64 {
        match self.counts.get(word) {
            Some(&c) => c as f64 / self.total as f64,
            None => 1.0 / (self.total + self.smoothing_vocab) as f64,
        }
    }
}

impl WordScorer for FrequencyScorer {
    fn score(&self, tokens: &[Token], candidates: &[usize]) -> Result<Vec<WordScore>> {
        candidates
            .iter()
            .map(|&i| {
                let tok = tokens.get(i).ok_or_else(|| {
                    Error::InvalidInput(format!("candidate index {i} out of range"))
                })?;
                Ok(WordScore {
                    token_index: i,
                    probability: self.probability(&tok.surface),
                })
            })
            .collect()
    }
}

/// Masks one word at a time and reads the encoder's vocabulary distribution
/// at the masked position.
#[derive(Debug, Clone)]
pub struct MlmScorer {
    encoder: Option<Arc<EncoderParams>>,
    vocab: Arc<Vocab>,
}

impl MlmScorer {
    pub fn new(encoder: Option<Arc<EncoderParams>>, vocab: Arc<Vocab>) -> Self {
        Self { encoder, vocab }
    }
}

impl WordScorer for MlmScorer {
    fn score(&self, tokens: &[Token], candidates: &[usize]) -> Result<Vec<WordScore>> {
        let params = self.encoder.as_ref().ok_or(Error::MissingEncoder)?;
        let ids: Vec<u32> = tokens.iter().map(|t| self.vocab.id(&t.surface)).collect();
        candidates
            .iter()
            .map(|&i| {
                if i >= ids.len() {
                    return Err(Error::InvalidInput(format!("candidate index {i} out of range")));
                }
                let dist = mlm_distribution(params, &ids, i)?;
                Ok(WordScore {
                    token_index: i,
                    probability: dist[ids[i] as usize],
                })
            })
            .collect()
    }
}

/// Seeded uniform scores: the unsorted-selection baseline.
#[derive(Debug, Clone)]
pub struct RandomScorer {
    seed: u64,
}

impl RandomScorer {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }
}

impl WordScorer for RandomScorer {
    fn score(&self, tokens: &[Token], candidates: &[usize]) -> Result<Vec<WordScore>> {
        // Seeded per query so the pick for a query never depends on call order.
        let mut seed = self.seed;
        for t in tokens {
            for b in t.surface.bytes() {
                seed = seed.wrapping_mul(0x100_0000_01b3).wrapping_add(b as u64);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(candidates
            .iter()
            .map(|&i| WordScore {
                token_index: i,
                probability: rng.random::<f64>(),
            })
            .collect())
    }
}

/// Scores ordered hardest first: ascending probability, ties to the lower index.
pub fn rank_by_hardness(scores: &[WordScore]) -> Vec<WordScore> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(|a, b| {
        a.probability
            .total_cmp(&b.probability)
            .then(a.token_index.cmp(&b.token_index))
    });
    ranked
}

/// Token indices of the `n` hardest words, returned in ascending index order.
pub fn select_top_n(scores: &[WordScore], n: usize) -> Vec<usize> {
    let mut picked: Vec<usize> = rank_by_hardness(scores)
        .into_iter()
        .take(n)
        .map(|s| s.token_index)
        .collect();
    picked.sort_unstable();
    picked
}
