use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear scoring layer `ŷ = W_o · z0` on the `[CLS]` state.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringHead {
    /// Shape `1 × d`.
    pub w_o: Array2<f64>,
}

impl ScoringHead {
    pub fn zeros(d: usize) -> Self {
        Self {
            w_o: Array2::zeros((1, d)),
        }
    }

    pub fn from_weights(w: Vec<f64>) -> Self {
        let d = w.len();
        Self {
            w_o: Array2::from_shape_vec((1, d), w).expect("1 x d"),
        }
    }

    pub fn dim(&self) -> usize {
        self.w_o.ncols()
    }
}

pub fn score_candidate(z0: ArrayView1<'_, f64>, head: &ScoringHead) -> Result<f64> {
    if z0.len() != head.dim() {
        return Err(Error::Shape(format!(
            "[CLS] state has {} dims, scoring head expects {}",
            z0.len(),
            head.dim()
        )));
    }
    Ok(head.w_o.row(0).dot(&z0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub raw_scores: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub argmax: usize,
}

impl Prediction {
    /// Softmax over candidates; `argmax` is the first index of the largest
    /// probability.
    pub fn from_scores(raw_scores: Vec<f64>) -> Self {
        Self::normalize(raw_scores.clone(), raw_scores)
    }

    /// Like [`Prediction::from_scores`] for scores given as
    /// `(specific, shared)` pairs, where the raw score is their sum. The
    /// softmax is taken over `specific`, which equals the softmax of the
    /// raw scores whenever `shared` is common to every candidate.
    pub fn from_split_scores(parts: &[(f64, f64)]) -> Self {
        let raw = parts.iter().map(|&(a, c)| a + c).collect();
        Self::normalize(parts.iter().map(|&(a, _)| a).collect(), raw)
    }

    fn normalize(logits: Vec<f64>, raw_scores: Vec<f64>) -> Self {
        let max = logits.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
        let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let probabilities: Vec<f64> = exps.into_iter().map(|e| e / sum).collect();
        let mut argmax = 0;
        for (i, &p) in probabilities.iter().enumerate() {
            if p > probabilities[argmax] {
                argmax = i;
            }
        }
        Self {
            raw_scores,
            probabilities,
            argmax,
        }
    }
}

/// `-ln p[label]`.
pub fn cross_entropy(prediction: &Prediction, label: usize) -> Result<f64> {
    let p = prediction.probabilities.get(label).ok_or_else(|| {
        Error::InvalidInput(format!(
            "label {label} out of range for {} candidates",
            prediction.probabilities.len()
        ))
    })?;
    Ok(-p.ln())
}
