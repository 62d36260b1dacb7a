use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::Example;
use crate::translation::LangTag;

/// Anything that picks a candidate index for an example.
pub trait Predictor: Sync {
    fn predict(&self, example: &Example) -> Result<usize>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanguageScore {
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Only languages with at least one example appear.
    pub per_language: BTreeMap<LangTag, LanguageScore>,
    /// Unweighted mean of the per-language accuracies (0 when empty).
    pub average: f64,
}

impl fmt::Display for EvalReport {
    /// `lang<TAB>accuracy<TAB>correct<TAB>total` rows, then `avg<TAB>accuracy`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (lang, s) in &self.per_language {
            writeln!(f, "{lang}\t{:.4}\t{}\t{}", s.accuracy, s.correct, s.total)?;
        }
        writeln!(f, "avg\t{:.4}", self.average)
    }
}

/// Accuracy per language and their macro average. Every example must be
/// labelled.
pub fn evaluate(dataset: &[Example], predictor: &dyn Predictor) -> Result<EvalReport> {
    if let Some(ex) = dataset.iter().find(|e| e.label.is_none()) {
        return Err(Error::InvalidInput(format!("example `{}` has no label", ex.id)));
    }
    let hits = dataset
        .par_iter()
        .map(|ex| Ok((ex.lang, predictor.predict(ex)? == ex.label.expect("checked"))))
        .collect::<Result<Vec<_>>>()?;
    let mut per_language: BTreeMap<LangTag, LanguageScore> = BTreeMap::new();
    for (lang, hit) in hits {
        let s = per_language.entry(lang).or_insert(LanguageScore {
            correct: 0,
            total: 0,
            accuracy: 0.0,
        });
        s.total += 1;
        s.correct += usize::from(hit);
    }
    for s in per_language.values_mut() {
        s.accuracy = s.correct as f64 / s.total as f64;
    }
    let average = if per_language.is_empty() {
        0.0
    } else {
        per_language.values().map(|s| s.accuracy).sum::<f64>() / per_language.len() as f64
    };
    Ok(EvalReport { per_language, average })
}

/// Writes `id<TAB>predicted_index` per example, in input order.
pub fn predict_file(dataset: &[Example], predictor: &dyn Predictor, out_path: &Path) -> Result<()> {
    let picks = dataset
        .par_iter()
        .map(|ex| predictor.predict(ex))
        .collect::<Result<Vec<_>>>()?;
    let body: String = dataset
        .iter()
        .zip(picks)
        .map(|(ex, p)| format!("{}\t{p}\n", ex.id))
        .collect();
    fs::write(out_path, body).map_err(|e| Error::io(out_path, e))
}
