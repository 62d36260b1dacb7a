use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub max_len: usize,
}

impl EncoderConfig {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            d_model: 64,
            heads: 4,
            layers: 2,
            max_len: 128,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn ff_dim(&self) -> usize {
        4 * self.d_model
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 || self.d_model == 0 || self.heads == 0 || self.max_len == 0 {
            return Err(Error::Shape(format!("degenerate encoder config {self:?}")));
        }
        if self.d_model % self.heads != 0 {
            return Err(Error::Shape(format!(
                "d_model {} not divisible by {} heads",
                self.d_model, self.heads
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w_query: Array2<f64>,
    pub w_key: Array2<f64>,
    pub w_value: Array2<f64>,
    pub w_out: Array2<f64>,
    pub attn_norm_gain: Array1<f64>,
    pub attn_norm_bias: Array1<f64>,
    pub ff_in: Array2<f64>,
    pub ff_out: Array2<f64>,
    pub ff_norm_gain: Array1<f64>,
    pub ff_norm_bias: Array1<f64>,
}

impl LayerParams {
    fn zeros(d: usize, ff: usize) -> Self {
        Self {
            w_query: Array2::zeros((d, d)),
            w_key: Array2::zeros((d, d)),
            w_value: Array2::zeros((d, d)),
            w_out: Array2::zeros((d, d)),
            attn_norm_gain: Array1::zeros(d),
            attn_norm_bias: Array1::zeros(d),
            ff_in: Array2::zeros((d, ff)),
            ff_out: Array2::zeros((ff, d)),
            ff_norm_gain: Array1::zeros(d),
            ff_norm_bias: Array1::zeros(d),
        }
    }
}

/// Every trainable tensor of the encoder. The same type doubles as the
/// gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub token_embedding: Array2<f64>,
    pub position_embedding: Array2<f64>,
    pub layers: Vec<LayerParams>,
    /// `d × V` projection used only for masked-word scoring.
    pub vocab_projection: Array2<f64>,
}

impl EncoderParams {
    pub fn zeros(config: EncoderConfig) -> Result<Self> {
        config.validate()?;
        let (v, d, t) = (config.vocab_size, config.d_model, config.max_len);
        Ok(Self {
            config,
            token_embedding: Array2::zeros((v, d)),
            position_embedding: Array2::zeros((t, d)),
            layers: (0..config.layers)
                .map(|_| LayerParams::zeros(d, config.ff_dim()))
                .collect(),
            vocab_projection: Array2::zeros((d, v)),
        })
    }

    /// Gaussian initialization: embeddings with unit variance, matrices with
    /// variance `1 / fan_in`, layer-norm gains one and offsets zero.
    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |a: &mut Array2<f64>, std: f64| {
            let dist = Normal::new(0.0, std).expect("positive std");
            a.mapv_inplace(|_| dist.sample(&mut rng));
        };
        let d = config.d_model as f64;
        fill(&mut p.token_embedding, 1.0);
        fill(&mut p.position_embedding, 0.1);
        for layer in &mut p.layers {
            for w in [&mut layer.w_query, &mut layer.w_key, &mut layer.w_value, &mut layer.w_out] {
                fill(w, d.powf(-0.5));
            }
            fill(&mut layer.ff_in, d.powf(-0.5));
            fill(&mut layer.ff_out, (4.0 * d).powf(-0.5));
            layer.attn_norm_gain.fill(1.0);
            layer.ff_norm_gain.fill(1.0);
        }
        fill(&mut p.vocab_projection, d.powf(-0.5));
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config).expect("config already validated")
    }

    /// Named views of every tensor, in checkpoint order.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut out = vec![
            ("token_embedding".to_string(), self.token_embedding.view().into_dyn()),
            ("position_embedding".to_string(), self.position_embedding.view().into_dyn()),
        ];
        for (i, l) in self.layers.iter().enumerate() {
            let named = [
                ("w_query", l.w_query.view().into_dyn()),
                ("w_key", l.w_key.view().into_dyn()),
                ("w_value", l.w_value.view().into_dyn()),
                ("w_out", l.w_out.view().into_dyn()),
                ("attn_norm_gain", l.attn_norm_gain.view().into_dyn()),
                ("attn_norm_bias", l.attn_norm_bias.view().into_dyn()),
                ("ff_in", l.ff_in.view().into_dyn()),
                ("ff_out", l.ff_out.view().into_dyn()),
                ("ff_norm_gain", l.ff_norm_gain.view().into_dyn()),
                ("ff_norm_bias", l.ff_norm_bias.view().into_dyn()),
            ];
            out.extend(named.into_iter().map(|(n, v)| (format!("layers.{i}.{n}"), v)));
        }
        out.push(("vocab_projection".to_string(), self.vocab_projection.view().into_dyn()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let mut out = vec![
            ("token_embedding".to_string(), self.token_embedding.view_mut().into_dyn()),
            ("position_embedding".to_string(), self.position_embedding.view_mut().into_dyn()),
        ];
        for (i, l) in self.layers.iter_mut().enumerate() {
            let named = [
                ("w_query", l.w_query.view_mut().into_dyn()),
                ("w_key", l.w_key.view_mut().into_dyn()),
                ("w_value", l.w_value.view_mut().into_dyn()),
                ("w_out", l.w_out.view_mut().into_dyn()),
                ("attn_norm_gain", l.attn_norm_gain.view_mut().into_dyn()),
                ("attn_norm_bias", l.attn_norm_bias.view_mut().into_dyn()),
                ("ff_in", l.ff_in.view_mut().into_dyn()),
                ("ff_out", l.ff_out.view_mut().into_dyn()),
                ("ff_norm_gain", l.ff_norm_gain.view_mut().into_dyn()),
                ("ff_norm_bias", l.ff_norm_bias.view_mut().into_dyn()),
            ];
            out.extend(named.into_iter().map(|(n, v)| (format!("layers.{i}.{n}"), v)));
        }
        out.push(("vocab_projection".to_string(), self.vocab_projection.view_mut().into_dyn()));
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|x| x.is_finite()))
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn add_scaled(&mut self, alpha: f64, other: &Self) {
        let src = other.tensors();
        for ((_, mut dst), (_, s)) in self.tensors_mut().into_iter().zip(src) {
            dst.zip_mut_with(&s, |d, &g| *d += alpha * g);
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for (_, mut t) in self.tensors_mut() {
            t.mapv_inplace(|x| x * alpha);
        }
    }
}
