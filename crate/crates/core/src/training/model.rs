use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::{Array2, ArrayViewD, ArrayViewMutD};

use crate::encoder::{
    build_input, build_visibility_mask, read_tensors, write_tensors, EncoderConfig, EncoderParams,
    FusedInput, MaskMode, NamedTensor, Vocab,
};
use crate::error::{Error, Result};
use crate::knowledge::KnowledgeSet;
use crate::text::tokenize_words;
use crate::training::head::ScoringHead;

/// Encoder and scoring head, the full set of trainable tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub encoder: EncoderParams,
    pub head: ScoringHead,
}

impl ModelParams {
    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self> {
        let encoder = EncoderParams::init(config, seed)?;
        let head = ScoringHead::zeros(config.d_model);
        Ok(Self { encoder, head })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: self.encoder.zeros_like(),
            head: ScoringHead::zeros(self.head.dim()),
        }
    }

    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f64>)> {
        let mut t = self.encoder.tensors();
        t.push(("head.w_o".to_string(), self.head.w_o.view().into_dyn()));
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f64>)> {
        let mut t = self.encoder.tensors_mut();
        t.push(("head.w_o".to_string(), self.head.w_o.view_mut().into_dyn()));
        t
    }

    pub fn add_scaled(&mut self, alpha: f64, other: &Self) {
        self.encoder.add_scaled(alpha, &other.encoder);
        self.head.w_o.zip_mut_with(&other.head.w_o, |d, &g| *d += alpha * g);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.encoder.scale(alpha);
        self.head.w_o.mapv_inplace(|x| x * alpha);
    }

    pub fn all_finite(&self) -> bool {
        self.encoder.all_finite() && self.head.w_o.iter().all(|x| x.is_finite())
    }

    fn config_tensor(&self) -> NamedTensor {
        let c = &self.encoder.config;
        NamedTensor {
            name: "config".into(),
            shape: vec![5],
            data: [c.vocab_size, c.d_model, c.heads, c.layers, c.max_len]
                .iter()
                .map(|&x| x as f64)
                .collect(),
        }
    }

    pub fn to_named_tensors(&self) -> Vec<NamedTensor> {
        let mut out = vec![self.config_tensor()];
        for (name, t) in self.tensors() {
            out.push(NamedTensor {
                name,
                shape: t.shape().to_vec(),
                data: t.iter().copied().collect(),
            });
        }
        out
    }

    pub fn from_named_tensors(tensors: Vec<NamedTensor>) -> Result<Self> {
        let mut by_name: BTreeMap<String, NamedTensor> =
            tensors.into_iter().map(|t| (t.name.clone(), t)).collect();
        let cfg = by_name
            .remove("config")
            .ok_or_else(|| Error::InvalidInput("checkpoint has no config tensor".into()))?;
        if cfg.data.len() != 5 {
            return Err(Error::Shape("config tensor must hold 5 values".into()));
        }
        let v = |i: usize| cfg.data[i] as usize;
        let config = EncoderConfig {
            vocab_size: v(0),
            d_model: v(1),
            heads: v(2),
            layers: v(3),
            max_len: v(4),
        };
        let mut params = ModelParams {
            encoder: EncoderParams::zeros(config)?,
            head: ScoringHead::zeros(config.d_model),
        };
        for (name, mut dst) in params.tensors_mut() {
            let src = by_name
                .remove(&name)
                .ok_or_else(|| Error::InvalidInput(format!("checkpoint is missing `{name}`")))?;
            if src.shape != dst.shape() {
                return Err(Error::Shape(format!(
                    "`{name}` has shape {:?}, expected {:?}",
                    src.shape,
                    dst.shape()
                )));
            }
            for (d, s) in dst.iter_mut().zip(src.data) {
                *d = s;
            }
        }
        if let Some(extra) = by_name.keys().next() {
            return Err(Error::InvalidInput(format!("unexpected checkpoint tensor `{extra}`")));
        }
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        write_tensors(BufWriter::new(file), &self.to_named_tensors())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_named_tensors(read_tensors(BufReader::new(file))?)
    }
}

/// All candidates of one question, each fused with its own knowledge.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGroup {
    pub id: String,
    pub inputs: Vec<FusedInput>,
    pub label: Option<usize>,
}

/// Trained parameters plus everything needed to turn text into inputs.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub vocab: Vocab,
    pub mask_mode: MaskMode,
}

const PARAMS_FILE: &str = "params.ckpt";
const VOCAB_FILE: &str = "vocab.txt";
const SETTINGS_FILE: &str = "model.txt";

impl Model {
    pub fn new(params: ModelParams, vocab: Vocab, mask_mode: MaskMode) -> Result<Self> {
        if params.encoder.config.vocab_size != vocab.len() {
            return Err(Error::Shape(format!(
                "encoder vocabulary {} differs from vocabulary file size {}",
                params.encoder.config.vocab_size,
                vocab.len()
            )));
        }
        Ok(Self {
            params,
            vocab,
            mask_mode,
        })
    }

    pub fn max_len(&self) -> usize {
        self.params.encoder.config.max_len
    }

    /// Fused input for one question/candidate pair.
    pub fn fuse(&self, question: &str, candidate: &str, knowledge: &KnowledgeSet) -> Result<FusedInput> {
        build_input(
            &self.vocab,
            &tokenize_words(question),
            &tokenize_words(candidate),
            knowledge,
            self.max_len(),
        )
    }

    pub fn mask_matrix(&self, input: &FusedInput) -> Array2<f64> {
        build_visibility_mask(input, self.mask_mode).matrix().clone()
    }

    /// Writes `params.ckpt`, `vocab.txt` and `model.txt` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.params.save(&dir.join(PARAMS_FILE))?;
        self.vocab.save(&dir.join(VOCAB_FILE))?;
        let mode = match self.mask_mode {
            MaskMode::Equation => "equation",
            MaskMode::ProseStrict => "prose",
            MaskMode::Full => "full",
        };
        let p = dir.join(SETTINGS_FILE);
        fs::write(&p, format!("mask = {mode}\n")).map_err(|e| Error::io(p, e))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let params = ModelParams::load(&dir.join(PARAMS_FILE))?;
        let vocab = Vocab::load(&dir.join(VOCAB_FILE))?;
        let p = dir.join(SETTINGS_FILE);
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        let mut mask_mode = MaskMode::Equation;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split_once('=').map(|(k, v)| (k.trim(), v.trim())) {
                Some(("mask", v)) => {
                    mask_mode = parse_mask_mode(v).map_err(|e| Error::parse(&p, i + 1, e.to_string()))?
                }
                _ => return Err(Error::parse(&p, i + 1, format!("unrecognized setting `{line}`"))),
            }
        }
        Self::new(params, vocab, mask_mode)
    }
}

pub fn parse_mask_mode(s: &str) -> Result<MaskMode> {
    match s {
        "equation" => Ok(MaskMode::Equation),
        "prose" | "prose_strict" | "prose-strict" => Ok(MaskMode::ProseStrict),
        "full" => Ok(MaskMode::Full),
        other => Err(Error::InvalidInput(format!("unknown mask mode `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> EncoderConfig {
        EncoderConfig { vocab_size: 9, d_model: 4, heads: 2, layers: 1, max_len: 8 }
    }

    #[test]
    fn checkpoint_file_is_byte_stable() {
        let dir = tempfile::tempdir().unwrap();
        let mut params = ModelParams::init(cfg(), 1).unwrap();
        params.head = ScoringHead::from_weights(vec![0.1, -0.2, f64::MIN_POSITIVE, 3.0]);
        let a = dir.path().join("a.ckpt");
        let b = dir.path().join("b.ckpt");
        params.save(&a).unwrap();
        let back = ModelParams::load(&a).unwrap();
        assert_eq!(back, params);
        back.save(&b).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }

    #[test]
    fn model_dir_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let vocab = Vocab::from_tokens(["a", "b", "c", "d"]);
        let model = Model::new(ModelParams::init(cfg(), 2).unwrap(), vocab, MaskMode::ProseStrict).unwrap();
        model.save(dir.path()).unwrap();
        let back = Model::load(dir.path()).unwrap();
        assert_eq!(back.params, model.params);
        assert_eq!(back.vocab, model.vocab);
        assert_eq!(back.mask_mode, MaskMode::ProseStrict);
    }

    #[test]
    fn vocab_size_must_match() {
        let vocab = Vocab::from_tokens(["a"]);
        assert!(Model::new(ModelParams::init(cfg(), 2).unwrap(), vocab, MaskMode::Full).is_err());
    }
}
