//! Candidate scoring, softmax prediction, cross-entropy training and
//! gradient verification.

mod gradcheck;
mod head;
mod model;
mod train;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, TensorCheck};
pub use head::{cross_entropy, score_candidate, Prediction, ScoringHead};
pub use model::{parse_mask_mode, CandidateGroup, Model, ModelParams};
pub use train::{evaluate_groups, loss_and_gradient, predict, train, EpochRecord, TrainConfig, TrainLog};
