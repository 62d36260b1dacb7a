//! Central finite-difference check of the hand-written backward pass.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::MaskMode;
use crate::error::Result;
use crate::training::model::{CandidateGroup, ModelParams};
use crate::training::train::loss_and_gradient;

#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub coordinates: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn coordinates(&self) -> usize {
        self.tensors.iter().map(|t| t.coordinates).sum()
    }
}

/// `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares analytic gradients of the group's cross-entropy against
/// `(f(θ+h) − f(θ−h)) / 2h` on up to `per_tensor` random coordinates of every
/// tensor (all coordinates when a tensor is smaller).
pub fn grad_check(
    params: &ModelParams,
    mask_mode: MaskMode,
    group: &CandidateGroup,
    h: f64,
    per_tensor: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let mut analytic = params.zeros_like();
    loss_and_gradient(params, mask_mode, group, Some((&mut analytic, 1.0)))?;
    let analytic_flat: Vec<(String, Vec<f64>)> = analytic
        .tensors()
        .into_iter()
        .map(|(n, t)| (n, t.iter().copied().collect()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        tensors: Vec::new(),
    };
    for (t_idx, (name, grad)) in analytic_flat.iter().enumerate() {
        let picks = sample(&mut rng, grad.len(), per_tensor.min(grad.len())).into_vec();
        let mut worst = 0.0f64;
        for &flat in &picks {
            let original = nth_value(&mut probe, t_idx, flat, None);
            nth_value(&mut probe, t_idx, flat, Some(original + h));
            let plus = loss_and_gradient(&probe, mask_mode, group, None)?.0;
            nth_value(&mut probe, t_idx, flat, Some(original - h));
            let minus = loss_and_gradient(&probe, mask_mode, group, None)?.0;
            nth_value(&mut probe, t_idx, flat, Some(original));
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max(relative_error(grad[flat], numeric));
        }
        report.max_rel_error = report.max_rel_error.max(worst);
        report.tensors.push(TensorCheck {
            name: name.clone(),
            coordinates: picks.len(),
            max_rel_error: worst,
        });
    }
    Ok(report)
}

/// Reads (and optionally overwrites) the `flat`-th element of tensor `t_idx`.
fn nth_value(params: &mut ModelParams, t_idx: usize, flat: usize, set: Option<f64>) -> f64 {
    let mut tensors = params.tensors_mut();
    let slot = tensors[t_idx]
        .1
        .iter_mut()
        .nth(flat)
        .expect("index within tensor");
    let old = *slot;
    if let Some(v) = set {
        *slot = v;
    }
    old
}
