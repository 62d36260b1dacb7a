//! Forward and reverse-mode passes of the post-norm transformer encoder.
//!
//! Each layer: multi-head masked attention, residual, layer norm,
//! GELU feed-forward, residual, layer norm. The same additive mask is used
//! in every layer.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use crate::encoder::attention::attention_with_weights;
use crate::encoder::input::FusedInput;
use crate::encoder::mask::VisibilityMask;
use crate::encoder::params::{EncoderParams, LayerParams};
use crate::encoder::vocab::{CLS_ID, MASK_ID, SEP_ID};
use crate::error::{Error, Result};

const NORM_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

struct NormCache {
    normalized: Array2<f64>,
    inv_std: Array1<f64>,
}

fn layer_norm(x: &Array2<f64>, gain: &Array1<f64>, bias: &Array1<f64>) -> (Array2<f64>, NormCache) {
    let d = x.ncols() as f64;
    let mut normalized = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (i, mut row) in normalized.axis_iter_mut(Axis(0)).enumerate() {
        let mean = row.sum() / d;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / d;
        let s = 1.0 / (var + NORM_EPS).sqrt();
        row.mapv_inplace(|v| v * s);
        inv_std[i] = s;
    }
    let out = &normalized * gain + bias;
    (out, NormCache { normalized, inv_std })
}

/// Returns the gradient w.r.t. the norm input; accumulates gain/bias grads.
fn layer_norm_backward(
    d_out: &Array2<f64>,
    cache: &NormCache,
    gain: &Array1<f64>,
    d_gain: &mut Array1<f64>,
    d_bias: &mut Array1<f64>,
) -> Array2<f64> {
    let d = d_out.ncols() as f64;
    *d_gain += &(d_out * &cache.normalized).sum_axis(Axis(0));
    *d_bias += &d_out.sum_axis(Axis(0));
    let d_norm = d_out * gain;
    let mut d_in = Array2::zeros(d_out.raw_dim());
    for i in 0..d_out.nrows() {
        let g = d_norm.row(i);
        let xh = cache.normalized.row(i);
        let mean_g = g.sum() / d;
        let mean_gx = g.dot(&xh) / d;
        let s = cache.inv_std[i];
        let mut row = d_in.row_mut(i);
        for j in 0..row.len() {
            row[j] = s * (g[j] - mean_g - xh[j] * mean_gx);
        }
    }
    d_in
}

struct LayerCache {
    input: Array2<f64>,
    query: Array2<f64>,
    key: Array2<f64>,
    value: Array2<f64>,
    weights: Vec<Array2<f64>>,
    context: Array2<f64>,
    norm1: NormCache,
    mid: Array2<f64>,
    pre_act: Array2<f64>,
    act: Array2<f64>,
    norm2: NormCache,
}

/// Activations kept from a forward pass for the backward pass.
pub struct ForwardCache {
    token_ids: Vec<u32>,
    layers: Vec<LayerCache>,
}

impl ForwardCache {
    /// Final hidden row `t` without the last layer-norm offset, i.e.
    /// `hidden[t] - ff_norm_bias` evaluated without the subtraction. `None`
    /// for a zero-layer encoder.
    pub(crate) fn final_row_without_offset(&self, params: &EncoderParams, t: usize) -> Option<Array1<f64>> {
        let (cache, layer) = (self.layers.last()?, params.layers.last()?);
        Some(&cache.norm2.normalized.row(t) * &layer.ff_norm_gain)
    }
}

fn layer_forward(
    layer: &LayerParams,
    heads: usize,
    x: Array2<f64>,
    mask: Option<&Array2<f64>>,
) -> (Array2<f64>, LayerCache) {
    let d = x.ncols();
    let dh = d / heads;
    let query = x.dot(&layer.w_query);
    let key = x.dot(&layer.w_key);
    let value = x.dot(&layer.w_value);
    let mut context = Array2::zeros(x.raw_dim());
    let mut weights = Vec::with_capacity(heads);
    for h in 0..heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let (out, w) = attention_with_weights(
            query.slice(cols),
            key.slice(cols),
            value.slice(cols),
            mask,
        );
        context.slice_mut(cols).assign(&out);
        weights.push(w);
    }
    let attended = &x + &context.dot(&layer.w_out);
    let (mid, norm1) = layer_norm(&attended, &layer.attn_norm_gain, &layer.attn_norm_bias);
    let pre_act = mid.dot(&layer.ff_in);
    let act = pre_act.mapv(gelu);
    let fed = &mid + &act.dot(&layer.ff_out);
    let (out, norm2) = layer_norm(&fed, &layer.ff_norm_gain, &layer.ff_norm_bias);
    (
        out,
        LayerCache {
            input: x,
            query,
            key,
            value,
            weights,
            context,
            norm1,
            mid,
            pre_act,
            act,
            norm2,
        },
    )
}

fn layer_backward(
    layer: &LayerParams,
    grads: &mut LayerParams,
    heads: usize,
    cache: &LayerCache,
    d_out: &Array2<f64>,
) -> Array2<f64> {
    let d = d_out.ncols();
    let dh = d / heads;

    let d_fed = layer_norm_backward(
        d_out,
        &cache.norm2,
        &layer.ff_norm_gain,
        &mut grads.ff_norm_gain,
        &mut grads.ff_norm_bias,
    );
    grads.ff_out += &cache.act.t().dot(&d_fed);
    let d_act = d_fed.dot(&layer.ff_out.t());
    let d_pre = &d_act * &cache.pre_act.mapv(gelu_grad);
    grads.ff_in += &cache.mid.t().dot(&d_pre);
    let d_mid = &d_fed + &d_pre.dot(&layer.ff_in.t());

    let d_attended = layer_norm_backward(
        &d_mid,
        &cache.norm1,
        &layer.attn_norm_gain,
        &mut grads.attn_norm_gain,
        &mut grads.attn_norm_bias,
    );
    grads.w_out += &cache.context.t().dot(&d_attended);
    let d_context = d_attended.dot(&layer.w_out.t());

    let scale = (dh as f64).sqrt();
    let mut d_query = Array2::zeros(d_out.raw_dim());
    let mut d_key = Array2::zeros(d_out.raw_dim());
    let mut d_value = Array2::zeros(d_out.raw_dim());
    for h in 0..heads {
        let cols = s![.., h * dh..(h + 1) * dh];
        let w = &cache.weights[h];
        let d_ctx_h = d_context.slice(cols);
        d_value.slice_mut(cols).assign(&w.t().dot(&d_ctx_h));
        let d_w = d_ctx_h.dot(&cache.value.slice(cols).t());
        let mut d_scores = Array2::zeros(w.raw_dim());
        for i in 0..w.nrows() {
            let dot = w.row(i).dot(&d_w.row(i));
            for j in 0..w.ncols() {
                d_scores[[i, j]] = w[[i, j]] * (d_w[[i, j]] - dot) / scale;
            }
        }
        d_query.slice_mut(cols).assign(&d_scores.dot(&cache.key.slice(cols)));
        d_key.slice_mut(cols).assign(&d_scores.t().dot(&cache.query.slice(cols)));
    }
    let x: ArrayView2<f64> = cache.input.view();
    grads.w_query += &x.t().dot(&d_query);
    grads.w_key += &x.t().dot(&d_key);
    grads.w_value += &x.t().dot(&d_value);

    d_attended
        + d_query.dot(&layer.w_query.t())
        + d_key.dot(&layer.w_key.t())
        + d_value.dot(&layer.w_value.t())
}

fn check_ids(params: &EncoderParams, ids: &[u32]) -> Result<()> {
    let cfg = &params.config;
    if ids.is_empty() {
        return Err(Error::InvalidInput("empty input sequence".into()));
    }
    if ids.len() > cfg.max_len {
        return Err(Error::InvalidInput(format!(
            "input length {} exceeds encoder max_len {}",
            ids.len(),
            cfg.max_len
        )));
    }
    if let Some(&bad) = ids.iter().find(|&&i| i as usize >= cfg.vocab_size) {
        return Err(Error::InvalidInput(format!(
            "token id {bad} outside vocabulary of size {}",
            cfg.vocab_size
        )));
    }
    Ok(())
}

pub(crate) fn forward(
    params: &EncoderParams,
    ids: &[u32],
    mask: Option<&Array2<f64>>,
) -> Result<(Array2<f64>, ForwardCache)> {
    check_ids(params, ids)?;
    if let Some(m) = mask {
        if m.dim() != (ids.len(), ids.len()) {
            return Err(Error::Shape(format!(
                "mask is {:?} for a sequence of length {}",
                m.dim(),
                ids.len()
            )));
        }
    }
    let d = params.config.d_model;
    let mut x = Array2::zeros((ids.len(), d));
    for (t, &id) in ids.iter().enumerate() {
        let mut row = x.row_mut(t);
        row.assign(&params.token_embedding.row(id as usize));
        row += &params.position_embedding.row(t);
    }
    let mut layers = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let (out, cache) = layer_forward(layer, params.config.heads, x, mask);
        layers.push(cache);
        x = out;
    }
    Ok((
        x,
        ForwardCache {
            token_ids: ids.to_vec(),
            layers,
        },
    ))
}

/// Accumulates parameter gradients into `grads` given `d_out = ∂L/∂hidden`.
pub(crate) fn backward(
    params: &EncoderParams,
    cache: &ForwardCache,
    d_out: Array2<f64>,
    grads: &mut EncoderParams,
) {
    let mut d = d_out;
    for (i, lc) in cache.layers.iter().enumerate().rev() {
        d = layer_backward(&params.layers[i], &mut grads.layers[i], params.config.heads, lc, &d);
    }
    for (t, &id) in cache.token_ids.iter().enumerate() {
        let row = d.row(t);
        let mut tok = grads.token_embedding.row_mut(id as usize);
        tok += &row;
        let mut pos = grads.position_embedding.row_mut(t);
        pos += &row;
    }
}

/// Final-layer hidden states (`T × d`) of `input` under `mask`.
pub fn encode(input: &FusedInput, mask: &VisibilityMask, params: &EncoderParams) -> Result<Array2<f64>> {
    if mask.len() != input.len() {
        return Err(Error::Shape(format!(
            "mask of size {} for input of length {}",
            mask.len(),
            input.len()
        )));
    }
    forward(params, input.token_ids(), Some(mask.matrix())).map(|(h, _)| h)
}

/// Encoder without any mask term in the attention scores.
pub fn encode_unmasked(input: &FusedInput, params: &EncoderParams) -> Result<Array2<f64>> {
    forward(params, input.token_ids(), None).map(|(h, _)| h)
}

/// Vocabulary distribution at position `masked` of `[CLS] ids [SEP]` with
/// that token replaced by `[MASK]`.
pub fn mlm_distribution(params: &EncoderParams, ids: &[u32], masked: usize) -> Result<Vec<f64>> {
    if masked >= ids.len() {
        return Err(Error::InvalidInput(format!("mask position {masked} out of range")));
    }
    let mut seq = Vec::with_capacity(ids.len() + 2);
    seq.push(CLS_ID);
    seq.extend_from_slice(ids);
    seq.push(SEP_ID);
    seq[masked + 1] = MASK_ID;
    let (hidden, _) = forward(params, &seq, None)?;
    let logits = hidden.row(masked + 1).dot(&params.vocab_projection);
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::input::Segment;
    use crate::encoder::mask::{build_visibility_mask, MaskMode};
    use crate::encoder::params::EncoderConfig;
    use Segment::{Knowledge as K, Query as Q};

    fn cfg(layers: usize) -> EncoderConfig {
        EncoderConfig { vocab_size: 20, d_model: 8, heads: 2, layers, max_len: 12 }
    }

    fn sample_input() -> FusedInput {
        FusedInput::new(
            vec![2, 5, 6, 7, 3, 8, 9, 3, 10, 11, 3],
            vec![Q, Q, Q, Q, Q, K(1), K(1), K(1), K(2), K(2), K(2)],
            vec![(1, K(1))],
        )
        .unwrap()
    }

    #[test]
    fn output_shape_and_length_limit() {
        let p = EncoderParams::init(cfg(2), 3).unwrap();
        let inp = sample_input();
        let m = build_visibility_mask(&inp, MaskMode::Equation);
        assert_eq!(encode(&inp, &m, &p).unwrap().dim(), (11, 8));

        let long = FusedInput::new(vec![2; 13], vec![Q; 13], vec![]).unwrap();
        let m = build_visibility_mask(&long, MaskMode::Full);
        assert!(encode(&long, &m, &p).is_err());
    }

    #[test]
    fn zero_layers_returns_embeddings() {
        let p = EncoderParams::init(cfg(0), 3).unwrap();
        let inp = sample_input();
        let m = build_visibility_mask(&inp, MaskMode::Equation);
        let h = encode(&inp, &m, &p).unwrap();
        for (t, &id) in inp.token_ids().iter().enumerate() {
            let want = &p.token_embedding.row(id as usize) + &p.position_embedding.row(t);
            assert_eq!(h.row(t), want);
        }
    }

    #[test]
    fn full_mask_equals_no_mask() {
        let p = EncoderParams::init(cfg(2), 4).unwrap();
        let inp = sample_input();
        let m = build_visibility_mask(&inp, MaskMode::Full);
        assert_eq!(encode(&inp, &m, &p).unwrap(), encode_unmasked(&inp, &p).unwrap());
    }

    #[test]
    fn other_snippets_do_not_leak_into_a_snippet() {
        let p = EncoderParams::init(cfg(2), 5).unwrap();
        let inp = sample_input();
        let perturbed = inp.with_token(5, 15).with_token(6, 16);
        let m = build_visibility_mask(&inp, MaskMode::Equation);
        let a = encode(&inp, &m, &p).unwrap();
        let b = encode(&perturbed, &m, &p).unwrap();
        assert_eq!(a.slice(s![8..11, ..]), b.slice(s![8..11, ..]));
        assert_ne!(a.row(0), b.row(0));
    }

    #[test]
    fn zero_projection_gives_uniform_mlm() {
        let mut p = EncoderParams::init(cfg(1), 6).unwrap();
        p.vocab_projection.fill(0.0);
        let dist = mlm_distribution(&p, &[5, 6, 7], 1).unwrap();
        assert!(dist.iter().all(|&x| (x - 1.0 / 20.0).abs() < 1e-15));
        assert!(mlm_distribution(&p, &[5], 3).is_err());
    }

    #[test]
    fn gelu_derivative_matches_difference() {
        for &x in &[-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8);
        }
    }
}
