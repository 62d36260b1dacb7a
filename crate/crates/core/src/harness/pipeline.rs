use std::sync::Arc;

use rayon::prelude::*;

use crate::encoder::Vocab;
use crate::error::Result;
use crate::harness::{Example, Predictor, Task};
use crate::knowledge::KnowledgeSet;
use crate::text::tokenize_words;
use crate::training::{predict, CandidateGroup, Model};
use crate::translation::{trt_retrieve_with_concepts, RetrievalConfig, Retrievers, Translator};

/// Everything needed to run translate-retrieve-translate for an example.
pub struct KnowledgeContext {
    pub retrievers: Retrievers,
    pub config: RetrievalConfig,
    pub translator: Arc<dyn Translator>,
}

/// One knowledge set per candidate, each retrieved for the question paired
/// with that candidate. CSQA examples with a question concept look up
/// exactly the concept and the candidate. Without a context every set is
/// empty.
pub fn retrieve_knowledge(example: &Example, ctx: Option<&KnowledgeContext>) -> Result<Vec<KnowledgeSet>> {
    let Some(ctx) = ctx else {
        return Ok(vec![KnowledgeSet::empty(); example.candidates.len()]);
    };
    example
        .candidates
        .iter()
        .map(|c| {
            let query = format!("{} {c}", example.question);
            let concepts = match (&example.question_concept, example.task) {
                (Some(concept), Task::Csqa) => vec![concept.clone(), c.clone()],
                _ => Vec::new(),
            };
            trt_retrieve_with_concepts(
                &query,
                &concepts,
                example.lang,
                ctx.translator.as_ref(),
                &ctx.retrievers,
                &ctx.config,
            )
        })
        .collect()
}

/// [`retrieve_knowledge`] for a whole dataset, in parallel.
pub fn retrieve_all(examples: &[Example], ctx: Option<&KnowledgeContext>) -> Result<Vec<Vec<KnowledgeSet>>> {
    examples.par_iter().map(|ex| retrieve_knowledge(ex, ctx)).collect()
}

/// Vocabulary over questions, candidates and knowledge text, in first-seen
/// order.
pub fn build_vocab(examples: &[Example], knowledge: &[Vec<KnowledgeSet>]) -> Vocab {
    let mut vocab = Vocab::from_tokens(std::iter::empty::<&str>());
    for (i, ex) in examples.iter().enumerate() {
        for w in tokenize_words(&ex.question) {
            vocab.add(&w);
        }
        for (j, c) in ex.candidates.iter().enumerate() {
            for w in tokenize_words(c) {
                vocab.add(&w);
            }
            let sets = knowledge.get(i).and_then(|k| k.get(j));
            for s in sets.into_iter().flatten() {
                for w in tokenize_words(&s.text) {
                    vocab.add(&w);
                }
            }
        }
    }
    vocab
}

pub fn candidate_group(model: &Model, example: &Example, knowledge: &[KnowledgeSet]) -> Result<CandidateGroup> {
    let inputs = example
        .candidates
        .iter()
        .zip(knowledge)
        .map(|(c, k)| model.fuse(&example.question, c, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateGroup {
        id: example.id.clone(),
        inputs,
        label: example.label,
    })
}

pub fn candidate_groups(
    model: &Model,
    examples: &[Example],
    knowledge: &[Vec<KnowledgeSet>],
) -> Result<Vec<CandidateGroup>> {
    examples
        .iter()
        .zip(knowledge)
        .map(|(ex, k)| candidate_group(model, ex, k))
        .collect()
}

/// A trained model, optionally with knowledge retrieval in front of it.
pub struct ModelPredictor<'a> {
    pub model: &'a Model,
    pub knowledge: Option<&'a KnowledgeContext>,
}

impl Predictor for ModelPredictor<'_> {
    fn predict(&self, example: &Example) -> Result<usize> {
        let knowledge = retrieve_knowledge(example, self.knowledge)?;
        let group = candidate_group(self.model, example, &knowledge)?;
        Ok(predict(&self.model.params, self.model.mask_mode, &group)?.argmax)
    }
}
