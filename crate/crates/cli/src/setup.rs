//! Turns the config file plus command-line overrides into pipeline objects.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use trt_core::config::Config;
use trt_core::encoder::{EncoderConfig, MaskMode};
use trt_core::hardness::{FrequencyScorer, MlmScorer, RandomScorer, WordScorer};
use trt_core::harness::{KnowledgeContext, Regime};
use trt_core::knowledge::{
    load_prompt_examples, Bm25Index, DictionaryStore, GenerativeClient, HttpCompletionClient,
    HttpCompletionConfig, KnowledgeSource, RelationSurfaces, StubGenerativeClient, TripletStore,
};
use trt_core::text::{Lemmatizer, PosLexicon};
use trt_core::training::{parse_mask_mode, Model, TrainConfig};
use trt_core::translation::{
    GenerativeRetriever, LangTag, MockTranslator, RetrievalConfig, Retrievers, ServiceConfig,
    ServiceTranslator, Translator,
};
use trt_core::{Error, Result};

use crate::GlobalArgs;

/// Resolved settings: config file values with command-line flags on top.
pub struct Settings {
    pub config: Config,
    pub data_dir: PathBuf,
    pub seed: u64,
    pub sources: Vec<KnowledgeSource>,
    pub mask: MaskMode,
    /// Whether the mask mode was set explicitly rather than defaulted.
    pub mask_overridden: bool,
    pub defs_n: usize,
    pub regime: Regime,
}

pub fn parse_source(name: &str) -> Result<Option<KnowledgeSource>> {
    match name {
        "wiktionary" => Ok(Some(KnowledgeSource::Dictionary)),
        "conceptnet" => Ok(Some(KnowledgeSource::Triplet)),
        "omcs" => Ok(Some(KnowledgeSource::Corpus)),
        "generative" => Ok(Some(KnowledgeSource::Generative)),
        "none" => Ok(None),
        other => Err(Error::InvalidInput(format!("unknown knowledge source `{other}`"))),
    }
}

impl Settings {
    pub fn resolve(global: &GlobalArgs) -> Result<Self> {
        let data_dir = global.data_dir.clone().unwrap_or_else(|| PathBuf::from("."));
        let config = match &global.config {
            Some(p) => Config::load(&rooted(&data_dir, p))?,
            None => Config::new(),
        };
        let seed = match global.seed {
            Some(s) => s,
            None => config.get_parsed("seed")?.unwrap_or(7),
        };
        let names: Vec<String> = if global.knowledge.is_empty() {
            match config.get("knowledge") {
                Some(_) => config.get_list("knowledge"),
                None => vec!["wiktionary".into()],
            }
        } else {
            global.knowledge.clone()
        };
        let mut sources = Vec::new();
        let mut saw_none = false;
        for n in &names {
            match parse_source(n)? {
                Some(s) if !sources.contains(&s) => sources.push(s),
                Some(_) => {}
                None => saw_none = true,
            }
        }
        if saw_none && !sources.is_empty() {
            return Err(Error::InvalidInput("`none` cannot be combined with other knowledge sources".into()));
        }
        let mask_overridden = global.mask.is_some() || config.get("mask").is_some();
        let mask = match (&global.mask, config.get("mask")) {
            (Some(m), _) => parse_mask_mode(m)?,
            (None, Some(m)) => parse_mask_mode(m)?,
            (None, None) => MaskMode::Equation,
        };
        let defs_n = match global.defs_n {
            Some(n) => n,
            None => config.get_parsed("defs_n")?.unwrap_or(6),
        };
        let regime = match (&global.regime, config.get("regime")) {
            (Some(r), _) => r.parse()?,
            (None, Some(r)) => r.parse()?,
            (None, None) => Regime::ZeroShot,
        };
        Ok(Self {
            config,
            data_dir,
            seed,
            sources,
            mask,
            mask_overridden,
            defs_n,
            regime,
        })
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        rooted(&self.data_dir, p)
    }

    fn config_path(&self, key: &str) -> Option<PathBuf> {
        self.config.get(key).map(|v| self.path(Path::new(v)))
    }

    fn required_path(&self, key: &str, why: &str) -> Result<PathBuf> {
        self.config_path(key)
            .ok_or_else(|| Error::InvalidInput(format!("config key `{key}` is required for {why}")))
    }

    pub fn languages(&self) -> Result<Vec<LangTag>> {
        let list = self.config.get_list("languages");
        if list.is_empty() {
            return Ok(LangTag::ALL.to_vec());
        }
        list.iter().map(|l| l.parse()).collect()
    }

    pub fn encoder_config(&self, vocab_size: usize) -> Result<EncoderConfig> {
        let mut c = EncoderConfig::new(vocab_size);
        if let Some(v) = self.config.get_parsed("d_model")? {
            c.d_model = v;
        }
        if let Some(v) = self.config.get_parsed("heads")? {
            c.heads = v;
        }
        if let Some(v) = self.config.get_parsed("layers")? {
            c.layers = v;
        }
        if let Some(v) = self.config.get_parsed("max_len")? {
            c.max_len = v;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let d = TrainConfig::default();
        Ok(TrainConfig {
            lr: self.config.get_parsed("lr")?.unwrap_or(d.lr),
            epochs: self.config.get_parsed("epochs")?.unwrap_or(d.epochs),
            batch_size: self.config.get_parsed("batch_size")?.unwrap_or(d.batch_size),
            seed: self.seed,
            target_accuracy: self.config.get_parsed("target_accuracy")?,
        })
    }

    /// The configured translator; the mock backend when none is named.
    pub fn translator(&self) -> Result<Arc<dyn Translator>> {
        match self.config.get("translator").unwrap_or("mock") {
            "mock" => {
                let mock = match self.config_path("mock_tables") {
                    Some(dir) => MockTranslator::load(&dir)?,
                    None => MockTranslator::new(),
                };
                Ok(Arc::new(mock))
            }
            "service" => {
                let cfg = ServiceConfig {
                    endpoint: self
                        .config
                        .get("translate_endpoint")
                        .ok_or_else(|| Error::InvalidInput("config key `translate_endpoint` is required".into()))?
                        .to_string(),
                    api_key_env: self.config.get("translate_api_key_env").map(str::to_string),
                    timeout_ms: self.config.get_parsed("translate_timeout_ms")?.unwrap_or(30_000),
                    cache_dir: Some(
                        self.config_path("cache_dir")
                            .unwrap_or_else(|| self.path(Path::new("cache"))),
                    ),
                };
                Ok(Arc::new(ServiceTranslator::new(&cfg)?))
            }
            other => Err(Error::InvalidInput(format!("unknown translator `{other}`"))),
        }
    }

    fn text_tools(&self, dictionary: Option<&DictionaryStore>) -> Result<(PosLexicon, Lemmatizer)> {
        let mut lexicon = match self.config_path("lexicon") {
            Some(p) => PosLexicon::load(&p)?,
            None => PosLexicon::new(Vec::<(&str, trt_core::text::Pos)>::new()),
        };
        if let Some(p) = self.config_path("stopwords") {
            lexicon = lexicon.load_stopwords(&p)?;
        }
        let mut lemmatizer = match self.config_path("validation") {
            Some(p) => Lemmatizer::load(&p, self.config_path("exceptions").as_deref())?,
            None => Lemmatizer::new(Vec::<String>::new()),
        };
        lemmatizer.extend_validation(lexicon.words().map(str::to_string).collect::<Vec<_>>());
        if let Some(d) = dictionary {
            lemmatizer.extend_validation(d.words().map(str::to_string).collect::<Vec<_>>());
        }
        Ok((lexicon, lemmatizer))
    }

    fn scorer(&self) -> Result<Arc<dyn WordScorer>> {
        match self.config.get("scorer").unwrap_or("frequency") {
            "frequency" => {
                let p = self.required_path("unigrams", "the frequency scorer")?;
                let v = self.config.get_parsed("smoothing_vocab")?;
                Ok(Arc::new(FrequencyScorer::load(&p, v)?))
            }
            "mlm" => {
                let model = Model::load(&self.required_path("scorer_model", "the MLM scorer")?)?;
                Ok(Arc::new(MlmScorer::new(
                    Some(Arc::new(model.params.encoder)),
                    Arc::new(model.vocab),
                )))
            }
            "random" => Ok(Arc::new(RandomScorer::new(self.seed))),
            other => Err(Error::InvalidInput(format!("unknown scorer `{other}`"))),
        }
    }

    fn generative_client(
        &self,
        dictionary: Option<&Arc<DictionaryStore>>,
        lexicon: &Arc<PosLexicon>,
        lemmatizer: &Arc<Lemmatizer>,
    ) -> Result<Arc<dyn GenerativeClient>> {
        match self.config.get("generative").unwrap_or("stub") {
            "stub" => {
                let d = dictionary
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput("the generative stub needs `dictionary`".into()))?;
                Ok(Arc::new(StubGenerativeClient::new(d, lexicon.clone(), lemmatizer.clone())))
            }
            "service" => {
                let cfg = HttpCompletionConfig {
                    endpoint: self
                        .config
                        .get("generative_endpoint")
                        .ok_or_else(|| Error::InvalidInput("config key `generative_endpoint` is required".into()))?
                        .to_string(),
                    api_key_env: self.config.get("generative_api_key_env").map(str::to_string),
                    timeout_ms: self.config.get_parsed("generative_timeout_ms")?.unwrap_or(30_000),
                    max_tokens: self.config.get_parsed("generative_max_tokens")?.unwrap_or(64),
                };
                Ok(Arc::new(HttpCompletionClient::new(&cfg)?))
            }
            other => Err(Error::InvalidInput(format!("unknown generative client `{other}`"))),
        }
    }

    pub fn retrieval_config(&self) -> Result<RetrievalConfig> {
        let d = RetrievalConfig::default();
        Ok(RetrievalConfig {
            sources: self.sources.clone(),
            defs_n: self.defs_n,
            corpus_top_k: self.config.get_parsed("corpus_top_k")?.unwrap_or(d.corpus_top_k),
            capacity: self.config.get_parsed("capacity")?.unwrap_or(d.capacity),
        })
    }

    /// Stores for the enabled sources only. `None` when knowledge is off.
    pub fn knowledge_context(&self) -> Result<Option<KnowledgeContext>> {
        if self.sources.is_empty() {
            return Ok(None);
        }
        let wants = |s| self.sources.contains(&s);
        let needs_dict = wants(KnowledgeSource::Dictionary)
            || (wants(KnowledgeSource::Generative) && self.config.get("generative").unwrap_or("stub") == "stub");
        let dictionary = if needs_dict {
            let p = self.required_path("dictionary", "dictionary retrieval")?;
            Some(Arc::new(DictionaryStore::load(&p)?))
        } else {
            None
        };
        let (lexicon, lemmatizer) = self.text_tools(dictionary.as_deref())?;
        let (lexicon, lemmatizer) = (Arc::new(lexicon), Arc::new(lemmatizer));
        let triplets = if wants(KnowledgeSource::Triplet) {
            let surfaces = match self.config_path("relations") {
                Some(p) => RelationSurfaces::load(&p)?,
                None => RelationSurfaces::default(),
            };
            let p = self.required_path("triplets", "triplet retrieval")?;
            Some(Arc::new(TripletStore::load(&p, surfaces)?))
        } else {
            None
        };
        let corpus = if wants(KnowledgeSource::Corpus) {
            let index = match (self.config_path("corpus_index"), self.config_path("corpus")) {
                (Some(p), _) => Bm25Index::load(&p)?,
                (None, Some(p)) => Bm25Index::build_from_file(&p)?,
                (None, None) => {
                    return Err(Error::InvalidInput(
                        "config key `corpus_index` or `corpus` is required for corpus retrieval".into(),
                    ))
                }
            };
            Some(Arc::new(index))
        } else {
            None
        };
        let generative = if wants(KnowledgeSource::Generative) {
            let p = self.required_path("generative_examples", "generative retrieval")?;
            Some(GenerativeRetriever {
                client: self.generative_client(dictionary.as_ref(), &lexicon, &lemmatizer)?,
                examples: load_prompt_examples(&p)?,
            })
        } else {
            None
        };
        let scorer: Arc<dyn WordScorer> = if wants(KnowledgeSource::Dictionary) {
            self.scorer()?
        } else {
            Arc::new(RandomScorer::new(self.seed))
        };
        Ok(Some(KnowledgeContext {
            retrievers: Retrievers {
                lexicon,
                lemmatizer,
                scorer,
                dictionary,
                triplets,
                corpus,
                generative,
            },
            config: self.retrieval_config()?,
            translator: self.translator()?,
        }))
    }
}

fn rooted(root: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    }
}
