//! Synthetic dictionary task: the question names a category, each candidate
//! is an invented word, and only the dictionary says which invented word
//! belongs to which category.

use std::collections::HashSet;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trt_core::encoder::{EncoderConfig, MaskMode};
use trt_core::harness::{
    assemble_training_set, build_vocab, candidate_groups, evaluate, retrieve_all, Example, KnowledgeContext,
    ModelPredictor, Regime, Task,
};
use trt_core::hardness::FrequencyScorer;
use trt_core::knowledge::{DictionaryStore, KnowledgeSource};
use trt_core::text::{Lemmatizer, Pos, PosLexicon};
use trt_core::training::{train, Model, ModelParams, TrainConfig};
use trt_core::translation::{LangTag, MockTranslator, RetrievalConfig, Retrievers};

use crate::Outcome;

const CATEGORIES: [(&str, &str); 8] = [
    ("fruit", "fruit"),
    ("tool", "outil"),
    ("animal", "bete"),
    ("color", "couleur"),
    ("vehicle", "vehicule"),
    ("drink", "boisson"),
    ("plant", "plante"),
    ("fabric", "tissu"),
];
const FUNCTION_WORDS: [(&str, &str); 7] =
    [("which", "lequel"), ("is", "est"), ("a", "un"), ("like", "comme"), ("kind", "sorte"), ("of", "de"), ("?", "?")];
const STOPWORDS: [&str; 6] = ["which", "is", "a", "like", "kind", "of"];

#[derive(Clone, Copy)]
struct Variant {
    /// Number of unscored, undefined words added to each question (0..=max).
    max_fillers: usize,
    /// Adds a defined word of another category to the question.
    distractor: bool,
}

/// Invented words ending in a vowel other than `e`, so no suffix rule of
/// the lemmatizer applies.
fn nonce_pool(rng: &mut ChaCha8Rng, n: usize, taken: &mut HashSet<String>) -> Vec<String> {
    const C: &[u8] = b"bdfgklmnprtvz";
    const V: &[u8] = b"aiou";
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w: String = (0..3)
            .flat_map(|_| [C[rng.random_range(0..C.len())], V[rng.random_range(0..V.len())]])
            .map(char::from)
            .collect();
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

struct World {
    /// Invented words per category, for training and for held-out questions.
    train_words: Vec<Vec<String>>,
    test_words: Vec<Vec<String>>,
    /// Defined words that only ever appear inside questions.
    distractors: Vec<Vec<String>>,
    fillers: Vec<String>,
    dictionary: DictionaryStore,
}

impl World {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let mut taken = HashSet::new();
        let mut split = |n| (0..CATEGORIES.len()).map(|_| nonce_pool(rng, n, &mut taken)).collect::<Vec<_>>();
        let train_words = split(40);
        let test_words = split(6);
        let distractors = split(4);
        let fillers = nonce_pool(rng, 40, &mut taken);
        let mut dictionary = DictionaryStore::new();
        for words in [&train_words, &test_words, &distractors] {
            for (c, ws) in words.iter().enumerate() {
                for w in ws {
                    dictionary.insert(w, &format!("a kind of {}", CATEGORIES[c].0));
                }
            }
        }
        Self {
            train_words,
            test_words,
            distractors,
            fillers,
            dictionary,
        }
    }

    fn examples(&self, rng: &mut ChaCha8Rng, n: usize, held_out: bool, variant: Variant, tag: &str) -> Vec<Example> {
        let pool = if held_out { &self.test_words } else { &self.train_words };
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut cats: Vec<usize> = (0..CATEGORIES.len()).collect();
            cats.shuffle(rng);
            let label = rng.random_range(0..4);
            let candidates: Vec<String> = cats[..4].iter().map(|&c| pool[c].choose(rng).unwrap().clone()).collect();
            let target = cats[label];
            let mut words = vec!["which".to_string()];
            let n_fill = rng.random_range(0..=variant.max_fillers);
            words.extend((0..n_fill).map(|_| self.fillers.choose(rng).unwrap().clone()));
            words.extend(["is", "a", CATEGORIES[target].0].map(String::from));
            if variant.distractor {
                let other = *cats[1..].choose(rng).unwrap();
                let other = if other == target { cats[0] } else { other };
                words.push("like".into());
                words.push(self.distractors[other].choose(rng).unwrap().clone());
            }
            words.push("?".into());
            out.push(Example {
                id: format!("{tag}{i}"),
                lang: LangTag::En,
                question: words.join(" "),
                candidates,
                label: Some(label),
                task: Task::Codah,
                question_concept: None,
            });
        }
        out
    }

    /// Categories are common words; every invented word is rare; the
    /// question's distractor is slightly less rare than any candidate, so
    /// the candidate's definition is retrieved first. Fillers are absent
    /// and therefore hardest of all.
    fn scorer(&self) -> FrequencyScorer {
        let mut counts: Vec<(String, u64)> = CATEGORIES.iter().map(|c| (c.0.to_string(), 1000)).collect();
        for w in self.train_words.iter().chain(&self.test_words).flatten() {
            counts.push((w.clone(), 1));
        }
        counts.extend(self.distractors.iter().flatten().map(|w| (w.clone(), 2)));
        FrequencyScorer::new(counts, None).unwrap()
    }

    fn context(&self, defs_n: usize) -> KnowledgeContext {
        let mut mock = MockTranslator::new();
        mock.insert_table(LangTag::Fr, LangTag::En, FUNCTION_WORDS.iter().chain(&CATEGORIES).map(|(en, fr)| (*fr, *en)))
            .unwrap();
        mock.derive_reverse_tables();
        let lexicon = PosLexicon::new(CATEGORIES.iter().map(|c| (c.0, Pos::Noun))).with_stopwords(STOPWORDS);
        let lemmatizer = Lemmatizer::new(CATEGORIES.iter().map(|c| c.0));
        KnowledgeContext {
            retrievers: Retrievers {
                lexicon: Arc::new(lexicon),
                lemmatizer: Arc::new(lemmatizer),
                scorer: Arc::new(self.scorer()),
                dictionary: Some(Arc::new(self.dictionary.clone())),
                triplets: None,
                corpus: None,
                generative: None,
            },
            config: RetrievalConfig {
                sources: vec![KnowledgeSource::Dictionary],
                defs_n,
                ..RetrievalConfig::default()
            },
            translator: Arc::new(mock),
        }
    }
}

struct Run<'a> {
    train: &'a [Example],
    test: &'a [Example],
    ctx: &'a KnowledgeContext,
    knowledge: bool,
    mask: MaskMode,
    epochs: usize,
}

/// Trains from scratch and returns the macro-averaged held-out accuracy.
fn train_and_score(run: Run<'_>) -> f64 {
    let ctx = run.knowledge.then_some(run.ctx);
    let k_train = retrieve_all(run.train, ctx).unwrap();
    let k_test = retrieve_all(run.test, ctx).unwrap();
    let all: Vec<Example> = run.train.iter().chain(run.test).cloned().collect();
    let vocab = build_vocab(&all, &[k_train.clone(), k_test].concat());
    let config = EncoderConfig {
        vocab_size: vocab.len(),
        d_model: 32,
        heads: 4,
        layers: 2,
        max_len: 48,
    };
    let mut model = Model::new(ModelParams::init(config, 7).unwrap(), vocab, run.mask).unwrap();
    let groups = candidate_groups(&model, run.train, &k_train).unwrap();
    let train_config = TrainConfig {
        lr: 0.05,
        epochs: run.epochs,
        batch_size: 8,
        seed: 7,
        target_accuracy: None,
    };
    train(&mut model, &groups, &[], &train_config).unwrap();
    let predictor = ModelPredictor {
        model: &model,
        knowledge: ctx,
    };
    evaluate(run.test, &predictor).unwrap().average
}

/// English training data plus its French translation.
fn bilingual(english: &[Example], ctx: &KnowledgeContext) -> Vec<Example> {
    assemble_training_set(english, Regime::TranslateTrain, ctx.translator.as_ref(), &[LangTag::Fr]).unwrap()
}

pub fn knowledge_helps() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let world = World::new(&mut rng);
    let plain = Variant {
        max_fillers: 0,
        distractor: false,
    };
    let train_en = world.examples(&mut rng, 240, false, plain, "t");
    let test_en = world.examples(&mut rng, 200, true, plain, "h");
    let ctx = world.context(6);
    let train_set = bilingual(&train_en, &ctx);
    let test_set = bilingual(&test_en, &ctx);
    let base = |knowledge, mask| Run {
        train: &train_set,
        test: &test_set,
        ctx: &ctx,
        knowledge,
        mask,
        epochs: 20,
    };
    let with = train_and_score(base(true, MaskMode::Equation));
    let without = train_and_score(base(false, MaskMode::Equation));

    let noisy = Variant {
        max_fillers: 0,
        distractor: true,
    };
    let train_d = world.examples(&mut rng, 240, false, noisy, "dt");
    let test_d = world.examples(&mut rng, 200, true, noisy, "dh");
    let ctx_d = world.context(6);
    let distract = |mask| {
        train_and_score(Run {
            train: &train_d,
            test: &test_d,
            ctx: &ctx_d,
            knowledge: true,
            mask,
            epochs: 20,
        })
    };
    let equation = distract(MaskMode::Equation);
    let full = distract(MaskMode::Full);
    Outcome::new(
        with >= 0.90 && without <= 0.40 && equation >= full,
        format!(
            "held-out en+fr accuracy with dictionary {with:.3} (>= 0.90), without knowledge {without:.3} (<= 0.40); \
             distractor variant EQUATION {equation:.3} >= FULL {full:.3}"
        ),
    )
}

pub fn definition_count() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let world = World::new(&mut rng);
    let variant = Variant {
        max_fillers: 5,
        distractor: false,
    };
    let train_set = world.examples(&mut rng, 240, false, variant, "t");
    let test_set = world.examples(&mut rng, 300, true, variant, "h");
    let accs: Vec<f64> = (1..=6)
        .map(|n| {
            let ctx = world.context(n);
            train_and_score(Run {
                train: &train_set,
                test: &test_set,
                ctx: &ctx,
                knowledge: true,
                mask: MaskMode::Equation,
                epochs: 20,
            })
        })
        .collect();
    let monotone = accs.windows(2).all(|w| w[1] >= w[0] - 0.02);
    let shown: Vec<String> = accs.iter().enumerate().map(|(i, a)| format!("N={}:{a:.3}", i + 1)).collect();
    Outcome::new(monotone, format!("held-out accuracy {} (non-decreasing within 0.02)", shown.join(" ")))
}
