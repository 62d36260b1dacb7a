//! Datasets, training regimes, evaluation and prediction files.

mod dataset;
mod eval;
mod pipeline;
mod regime;

pub use dataset::{load_dataset, write_dataset, Example, Task, FIELD_ALIASES};
pub use eval::{evaluate, predict_file, EvalReport, LanguageScore, Predictor};
pub use pipeline::{
    build_vocab, candidate_group, candidate_groups, retrieve_all, retrieve_knowledge, KnowledgeContext,
    ModelPredictor,
};
pub use regime::{assemble_training_set, Regime};
