use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trt_core::harness::{
    assemble_training_set, build_vocab, candidate_groups, evaluate, load_dataset, predict_file, retrieve_all,
    ModelPredictor, Task,
};
use trt_core::knowledge::Bm25Index;
use trt_core::training::{train, Model, ModelParams};
use trt_core::translation::{trt_retrieve_with_concepts, LangTag};
use trt_core::{Error, ErrorKind, Result};

mod setup;

use setup::Settings;

#[derive(Parser, Debug)]
#[command(name = "trt", version, about = "Translate-retrieve-translate knowledge fusion for multiple-choice questions")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Knowledge source; repeat for several. One of wiktionary, conceptnet, omcs, generative, none.
    #[arg(long, global = true, value_parser = ["wiktionary", "conceptnet", "omcs", "generative", "none"])]
    pub knowledge: Vec<String>,
    #[arg(long, global = true, value_parser = ["equation", "prose", "full"])]
    pub mask: Option<String>,
    /// Number of definitions retrieved per query pair (default 6).
    #[arg(long, global = true)]
    pub defs_n: Option<usize>,
    #[arg(long, global = true, value_parser = ["zero-shot", "translate-train"])]
    pub regime: Option<String>,
    /// Root for every relative path, including those in the config file.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a BM25 index from a one-sentence-per-line corpus.
    BuildIndex {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Retrieve knowledge for one query and print it.
    Retrieve {
        #[arg(long)]
        query: String,
        #[arg(long, default_value = "en")]
        lang: String,
        /// Concept phrase to look up instead of hardness-selected words.
        #[arg(long)]
        concept: Vec<String>,
    },
    /// Train a model and write it to a directory.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long, value_parser = ["csqa", "codah"])]
        task: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report accuracy per language and the macro average.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = ["csqa", "codah"])]
        task: String,
        #[arg(long)]
        model: PathBuf,
    },
    /// Write `id<TAB>predicted_index` for every example.
    Predict {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = ["csqa", "codah"])]
        task: String,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(settings: Settings, command: Command) -> Result<()> {
    match command {
        Command::BuildIndex { corpus, out } => {
            let index = Bm25Index::build_from_file(&settings.path(&corpus))?;
            index.save(&settings.path(&out))?;
            println!("indexed {} sentences", index.num_docs());
        }
        Command::Retrieve { query, lang, concept } => {
            let lang: LangTag = lang.parse()?;
            let Some(ctx) = settings.knowledge_context()? else {
                return Ok(());
            };
            let set = trt_retrieve_with_concepts(
                &query,
                &concept,
                lang,
                ctx.translator.as_ref(),
                &ctx.retrievers,
                &ctx.config,
            )?;
            for s in &set {
                let span = s.linked_span.map_or("-".to_string(), |(a, b)| format!("{a}-{b}"));
                let score = s.score.map_or("-".to_string(), |x| format!("{x:.4}"));
                println!("{:?}\t{span}\t{score}\t{}", s.source, s.text);
            }
        }
        Command::Train { train: train_path, dev, task, out } => {
            let task: Task = task.parse()?;
            let english = load_dataset(&settings.path(&train_path), task)?;
            let dev_set = match &dev {
                Some(p) => load_dataset(&settings.path(p), task)?,
                None => Vec::new(),
            };
            let ctx = settings.knowledge_context()?;
            let train_set = match settings.regime {
                trt_core::harness::Regime::ZeroShot => english,
                regime => {
                    let translator = settings.translator()?;
                    assemble_training_set(&english, regime, translator.as_ref(), &settings.languages()?)?
                }
            };
            log::info!("{} training examples ({})", train_set.len(), settings.regime);
            let train_knowledge = retrieve_all(&train_set, ctx.as_ref())?;
            let dev_knowledge = retrieve_all(&dev_set, ctx.as_ref())?;
            let vocab = build_vocab(&train_set, &train_knowledge);
            let config = settings.encoder_config(vocab.len())?;
            let params = ModelParams::init(config, settings.seed)?;
            let mut model = Model::new(params, vocab, settings.mask)?;
            let train_groups = candidate_groups(&model, &train_set, &train_knowledge)?;
            let dev_groups = candidate_groups(&model, &dev_set, &dev_knowledge)?;
            let log = train(&mut model, &train_groups, &dev_groups, &settings.train_config()?)?;
            let out = settings.path(&out);
            model.save(&out)?;
            let log_path = out.join("train_log.tsv");
            fs::write(&log_path, log.to_tsv()).map_err(|e| Error::io(&log_path, e))?;
            print!("{}", log.to_tsv());
        }
        Command::Evaluate { data, task, model } => {
            let task: Task = task.parse()?;
            let dataset = load_dataset(&settings.path(&data), task)?;
            let model = load_model(&settings, &model)?;
            let ctx = settings.knowledge_context()?;
            let predictor = ModelPredictor {
                model: &model,
                knowledge: ctx.as_ref(),
            };
            print!("{}", evaluate(&dataset, &predictor)?);
        }
        Command::Predict { data, task, model, out } => {
            let task: Task = task.parse()?;
            let dataset = load_dataset(&settings.path(&data), task)?;
            let model = load_model(&settings, &model)?;
            let ctx = settings.knowledge_context()?;
            let predictor = ModelPredictor {
                model: &model,
                knowledge: ctx.as_ref(),
            };
            predict_file(&dataset, &predictor, &settings.path(&out))?;
        }
    }
    Ok(())
}

/// Loads a model directory; an explicit `--mask` overrides the saved mode.
fn load_model(settings: &Settings, dir: &std::path::Path) -> Result<Model> {
    let mut model = Model::load(&settings.path(dir))?;
    if settings.mask_overridden {
        model.mask_mode = settings.mask;
    }
    Ok(model)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let settings = match Settings::resolve(&cli.global) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(settings, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Service => 3,
            })
        }
    }
}
