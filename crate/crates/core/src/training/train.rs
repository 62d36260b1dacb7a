use std::fmt;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::encoder::{backward, build_visibility_mask, forward, ForwardCache, MaskMode};
use crate::error::{Error, Result};
use crate::training::head::{cross_entropy, score_candidate, Prediction};
use crate::training::model::{CandidateGroup, Model, ModelParams};

fn check_group(group: &CandidateGroup) -> Result<()> {
    if group.inputs.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "example {} has {} candidates; need at least 2",
            group.id,
            group.inputs.len()
        )));
    }
    Ok(())
}

/// Candidate score split into the part that differs between candidates and
/// the part shared by all of them (head applied to the last layer-norm
/// offset). The shared part cannot change the softmax, so probabilities are
/// taken over the first component only; this keeps the loss exactly
/// independent of that offset instead of independent up to rounding.
fn split_score(params: &ModelParams, hidden: &Array2<f64>, cache: &ForwardCache) -> Result<(f64, f64)> {
    match cache.final_row_without_offset(&params.encoder, 0) {
        Some(row) => {
            let specific = score_candidate(row.view(), &params.head)?;
            let offset = params.encoder.layers.last().map(|l| l.ff_norm_bias.view());
            let shared = match offset {
                Some(b) => score_candidate(b, &params.head)?,
                None => 0.0,
            };
            Ok((specific, shared))
        }
        None => Ok((score_candidate(hidden.row(0), &params.head)?, 0.0)),
    }
}

/// Scores every candidate of `group` and normalizes over them.
pub fn predict(params: &ModelParams, mask_mode: MaskMode, group: &CandidateGroup) -> Result<Prediction> {
    check_group(group)?;
    let scores = group
        .inputs
        .iter()
        .map(|input| {
            let mask = build_visibility_mask(input, mask_mode);
            let (hidden, cache) = forward(&params.encoder, input.token_ids(), Some(mask.matrix()))?;
            split_score(params, &hidden, &cache)
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(Prediction::from_split_scores(&scores))
}

/// Cross-entropy of one labelled group; when `grads` is given, adds
/// `scale * ∂loss/∂θ` into it.
pub fn loss_and_gradient(
    params: &ModelParams,
    mask_mode: MaskMode,
    group: &CandidateGroup,
    grads: Option<(&mut ModelParams, f64)>,
) -> Result<(f64, Prediction)> {
    check_group(group)?;
    let label = group
        .label
        .ok_or_else(|| Error::InvalidInput(format!("example {} has no label", group.id)))?;
    let mut passes = Vec::with_capacity(group.inputs.len());
    let mut scores = Vec::with_capacity(group.inputs.len());
    for input in &group.inputs {
        let mask = build_visibility_mask(input, mask_mode);
        let (hidden, cache) = forward(&params.encoder, input.token_ids(), Some(mask.matrix()))?;
        scores.push(split_score(params, &hidden, &cache)?);
        passes.push((hidden, cache));
    }
    let prediction = Prediction::from_split_scores(&scores);
    let loss = cross_entropy(&prediction, label)?;

    if let Some((grads, scale)) = grads {
        let d = params.head.dim();
        for (i, (hidden, cache)) in passes.into_iter().enumerate() {
            let indicator = if i == label { 1.0 } else { 0.0 };
            let d_score = scale * (prediction.probabilities[i] - indicator);
            if d_score == 0.0 {
                continue;
            }
            let mut head_row = grads.head.w_o.row_mut(0);
            head_row.scaled_add(d_score, &hidden.row(0));
            let mut d_hidden = Array2::zeros((hidden.nrows(), d));
            d_hidden
                .row_mut(0)
                .assign(&(&params.head.w_o.row(0) * d_score));
            backward(&params.encoder, &cache, d_hidden, &mut grads.encoder);
        }
    }
    Ok((loss, prediction))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop once training-set accuracy (measured after an epoch) reaches this.
    pub target_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-2,
            epochs: 10,
            batch_size: 4,
            seed: 7,
            target_accuracy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub split: String,
    pub loss: f64,
    pub accuracy: f64,
}

impl fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}", self.epoch, self.split, self.loss, self.accuracy)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

impl TrainLog {
    /// Line-delimited `epoch<TAB>split<TAB>loss<TAB>accuracy`.
    pub fn to_tsv(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn last(&self, split: &str) -> Option<&EpochRecord> {
        self.records.iter().rev().find(|r| r.split == split)
    }
}

/// Mean loss and accuracy of `params` over labelled groups.
pub fn evaluate_groups(params: &ModelParams, mask_mode: MaskMode, groups: &[CandidateGroup]) -> Result<(f64, f64)> {
    if groups.is_empty() {
        return Ok((0.0, 0.0));
    }
    let per: Vec<(f64, bool)> = groups
        .par_iter()
        .map(|g| {
            let (loss, pred) = loss_and_gradient(params, mask_mode, g, None)?;
            Ok((loss, Some(pred.argmax) == g.label))
        })
        .collect::<Result<_>>()?;
    let n = per.len() as f64;
    let loss = per.iter().map(|p| p.0).sum::<f64>() / n;
    let acc = per.iter().filter(|p| p.1).count() as f64 / n;
    Ok((loss, acc))
}

/// Mini-batch SGD on mean cross-entropy. Deterministic for a fixed seed.
pub fn train(
    model: &mut Model,
    train_set: &[CandidateGroup],
    dev_set: &[CandidateGroup],
    config: &TrainConfig,
) -> Result<TrainLog> {
    if train_set.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if let Some(g) = train_set.iter().find(|g| g.label.is_none()) {
        return Err(Error::InvalidInput(format!("training example {} has no label", g.id)));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidInput("batch_size must be positive".into()));
    }
    let mask_mode = model.mask_mode;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = TrainLog::default();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grads = model.params.zeros_like();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let group = &train_set[i];
                let (loss, _) =
                    loss_and_gradient(&model.params, mask_mode, group, Some((&mut grads, scale)))?;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss {
                        epoch,
                        example: group.id.clone(),
                        value: loss,
                    });
                }
            }
            model.params.add_scaled(-config.lr, &grads);
        }
        if !model.params.all_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                example: "<parameters>".into(),
                value: f64::NAN,
            });
        }
        let (loss, accuracy) = evaluate_groups(&model.params, mask_mode, train_set)?;
        log::debug!("epoch {epoch}: train loss {loss:.4} acc {accuracy:.4}");
        log.records.push(EpochRecord {
            epoch,
            split: "train".into(),
            loss,
            accuracy,
        });
        if !dev_set.is_empty() {
            let (loss, accuracy) = evaluate_groups(&model.params, mask_mode, dev_set)?;
            log.records.push(EpochRecord {
                epoch,
                split: "dev".into(),
                loss,
                accuracy,
            });
        }
        if config.target_accuracy.is_some_and(|t| accuracy >= t) {
            break;
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{EncoderConfig, FusedInput, Segment, Vocab};
    use Segment::{Knowledge as K, Query as Q};

    fn cfg() -> EncoderConfig {
        EncoderConfig { vocab_size: 16, d_model: 8, heads: 2, layers: 1, max_len: 10 }
    }

    fn group(label: usize) -> CandidateGroup {
        let mk = |c: u32| {
            FusedInput::new(vec![2, 5, 6, c, 3, 10, 3], vec![Q, Q, Q, Q, Q, K(1), K(1)], vec![]).unwrap()
        };
        CandidateGroup { id: "g".into(), inputs: vec![mk(7), mk(8), mk(9)], label: Some(label) }
    }

    fn model(seed: u64) -> Model {
        let vocab = Vocab::from_tokens((0..11).map(|i| format!("t{i}")));
        let mut params = ModelParams::init(cfg(), seed).unwrap();
        params.head.w_o.fill(0.1);
        Model::new(params, vocab, MaskMode::Equation).unwrap()
    }

    #[test]
    fn zero_learning_rate_leaves_parameters() {
        let mut m = model(1);
        let before = m.params.clone();
        let cfg = TrainConfig { lr: 0.0, epochs: 2, batch_size: 1, seed: 3, target_accuracy: None };
        train(&mut m, &[group(1)], &[], &cfg).unwrap();
        assert_eq!(m.params, before);
    }

    #[test]
    fn one_small_step_lowers_the_loss() {
        let mut m = model(2);
        let g = group(2);
        let (before, _) = loss_and_gradient(&m.params, MaskMode::Equation, &g, None).unwrap();
        let cfg = TrainConfig { lr: 1e-3, epochs: 1, batch_size: 1, seed: 3, target_accuracy: None };
        train(&mut m, &[g.clone()], &[], &cfg).unwrap();
        let (after, _) = loss_and_gradient(&m.params, MaskMode::Equation, &g, None).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn same_seed_same_log() {
        let data = vec![group(0), group(1), group(2), group(1)];
        let cfg = TrainConfig { lr: 0.05, epochs: 3, batch_size: 2, seed: 9, target_accuracy: None };
        let mut a = model(4);
        let mut b = model(4);
        let la = train(&mut a, &data, &data[..1], &cfg).unwrap();
        let lb = train(&mut b, &data, &data[..1], &cfg).unwrap();
        assert_eq!(la.to_tsv(), lb.to_tsv());
        assert_eq!(a.params, b.params);
        assert_eq!(la.records.len(), 6);
        assert!(la.to_tsv().lines().all(|l| l.split('\t').count() == 4));
    }

    #[test]
    fn rejects_bad_datasets() {
        let mut m = model(5);
        let cfg = TrainConfig::default();
        assert!(train(&mut m, &[], &[], &cfg).is_err());
        let mut unlabeled = group(0);
        unlabeled.label = None;
        assert!(train(&mut m, &[unlabeled], &[], &cfg).is_err());
        let mut single = group(0);
        single.inputs.truncate(1);
        assert!(predict(&m.params, MaskMode::Equation, &single).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        let mut m = model(6);
        let cfg = TrainConfig { lr: 1e300, epochs: 3, batch_size: 1, seed: 1, target_accuracy: None };
        let err = train(&mut m, &[group(0), group(1)], &[], &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { .. }), "{err}");
    }
}
