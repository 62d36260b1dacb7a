use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::Example;
use crate::translation::{LangTag, Translator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Train on English only.
    ZeroShot,
    /// Train on English plus a machine-translated copy per language.
    TranslateTrain,
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero-shot" | "zero_shot" => Ok(Regime::ZeroShot),
            "translate-train" | "translate_train" => Ok(Regime::TranslateTrain),
            other => Err(Error::InvalidInput(format!(
                "unknown regime `{other}` (expected zero-shot or translate-train)"
            ))),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::ZeroShot => "zero-shot",
            Regime::TranslateTrain => "translate-train",
        })
    }
}

fn translate_example(ex: &Example, lang: LangTag, t: &dyn Translator) -> Result<Example> {
    Ok(Example {
        id: format!("{}-{lang}", ex.id),
        lang,
        question: t.translate(&ex.question, LangTag::En, lang)?,
        candidates: ex
            .candidates
            .iter()
            .map(|c| t.translate(c, LangTag::En, lang))
            .collect::<Result<_>>()?,
        label: ex.label,
        task: ex.task,
        question_concept: ex
            .question_concept
            .as_deref()
            .map(|c| t.translate(c, LangTag::En, lang))
            .transpose()?,
    })
}

/// The English examples, followed under translate-train by one translated
/// copy of the whole set per non-English entry of `languages`, in order.
pub fn assemble_training_set(
    english: &[Example],
    regime: Regime,
    translator: &dyn Translator,
    languages: &[LangTag],
) -> Result<Vec<Example>> {
    if let Some(ex) = english.iter().find(|e| e.lang != LangTag::En) {
        return Err(Error::InvalidInput(format!(
            "training example `{}` is in {}, expected en",
            ex.id, ex.lang
        )));
    }
    let mut out = english.to_vec();
    if regime == Regime::ZeroShot {
        return Ok(out);
    }
    for &lang in languages.iter().filter(|l| **l != LangTag::En) {
        let copies = english
            .par_iter()
            .map(|ex| translate_example(ex, lang, translator))
            .collect::<Result<Vec<_>>>()?;
        out.extend(copies);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Task;
    use crate::translation::MockTranslator;

    fn english(n: usize) -> Vec<Example> {
        (0..n)
            .map(|i| Example {
                id: format!("e{i}"),
                lang: LangTag::En,
                question: "where does the dog sleep".into(),
                candidates: vec!["kennel".into(), "tree".into(), "sky".into(), "sea".into()],
                label: Some(i % 4),
                task: Task::Codah,
                question_concept: None,
            })
            .collect()
    }

    fn mock_all() -> MockTranslator {
        let mut m = MockTranslator::new();
        for l in LangTag::non_english() {
            m.insert_table(LangTag::En, l, [("dog", format!("dog_{l}"))]).unwrap();
        }
        m.insert_table(LangTag::En, LangTag::Fr, [("kennel", "niche"), ("the", "le")]).unwrap();
        m
    }

    #[test]
    fn zero_shot_is_identity() {
        let exs = english(10);
        let out = assemble_training_set(&exs, Regime::ZeroShot, &mock_all(), &LangTag::ALL).unwrap();
        assert_eq!(out, exs);
    }

    #[test]
    fn translate_train_adds_every_language() {
        let exs = english(10);
        let out = assemble_training_set(&exs, Regime::TranslateTrain, &mock_all(), &LangTag::ALL).unwrap();
        assert_eq!(out.len(), 160);
        let fr: Vec<_> = out.iter().filter(|e| e.lang == LangTag::Fr).collect();
        assert_eq!(fr.len(), 10);
        assert_eq!(fr[3].id, "e3-fr");
        assert_eq!(fr[3].label, Some(3));
        assert_eq!(fr[3].question, "where does le dog_fr sleep");
        assert_eq!(fr[3].candidates, ["niche", "tree", "sky", "sea"]);
    }

    #[test]
    fn non_english_input_rejected() {
        let mut exs = english(2);
        exs[1].lang = LangTag::De;
        assert!(assemble_training_set(&exs, Regime::ZeroShot, &mock_all(), &[]).is_err());
    }
}
