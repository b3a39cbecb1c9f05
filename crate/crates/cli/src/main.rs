use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use codebridge::bridge::{build_seeds, run_pipeline, PipelineConfig, SeedVariant};
use codebridge::classifier::{
    filter_hope, read_labels, train_hope_classifier, write_labels, HopeClassifier, HopeModel, HopeTrainConfig,
    LabeledDoc, DEFAULT_DECISION_THRESHOLD,
};
use codebridge::cmi::{score_corpus, select_code_mixed, write_reports, DEFAULT_THRESHOLD};
use codebridge::corpus::{ingest, Corpus, IngestOptions, RecordFormat, Subset};
use codebridge::embedding::{train_embeddings, EmbeddingTable, TrainConfig};
use codebridge::eval::{confusion_matrix, fleiss_kappa, project_2d, sampling_yield};
use codebridge::langid::{
    anchor_clusters, fit_clusters, neutral_lexicon, Anchors, ClusterModel, LanguageLabel, TokenLabeler,
    TokenLabeling, DEFAULT_EPSILON,
};
use codebridge::sampler::{build_index, nn_sample, random_sample, SampleBatch};
use codebridge::service::{self, AnnotationContext, Service};
use codebridge::synth::{Generator, SynthConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "codebridge", version, about = "Code-mixing detection and nearest-neighbor bridging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize and tokenize a record file.
    Ingest(IngestArgs),
    /// Generate a synthetic bilingual corpus with gold labels.
    Synth(SynthArgs),
    #[command(subcommand)]
    Embed(EmbedCommand),
    #[command(subcommand)]
    Langid(LangidCommand),
    #[command(subcommand)]
    Cmi(CmiCommand),
    #[command(subcommand)]
    Hope(HopeCommand),
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    #[command(subcommand)]
    Sample(SampleCommand),
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run the annotation service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Tag for records without a subset field.
    #[arg(long)]
    subset: Option<Subset>,
    #[arg(long, default_value = "jsonl")]
    format: RecordFormat,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20_000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    mixed_fraction: f64,
    #[arg(long, default_value_t = 0.02)]
    positive_rate: f64,
    /// Size of the English labeled set for the classifier.
    #[arg(long, default_value_t = 3000)]
    train_n: usize,
    #[arg(long, default_value_t = 0.23)]
    train_positive_rate: f64,
}

#[derive(Args)]
struct TableArgs {
    /// Text vector file.
    #[arg(long)]
    vectors: PathBuf,
}

impl TableArgs {
    fn load(&self) -> Result<EmbeddingTable> {
        EmbeddingTable::load(&self.vectors).with_context(|| format!("loading {}", self.vectors.display()))
    }
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Anchored cluster model.
    #[arg(long)]
    model: PathBuf,
    /// Override the model's neutral margin.
    #[arg(long)]
    epsilon: Option<f64>,
}

impl ModelArgs {
    fn load(&self) -> Result<(ClusterModel, EmbeddingTable)> {
        let mut model =
            ClusterModel::load(&self.model).with_context(|| format!("loading {}", self.model.display()))?;
        if let Some(eps) = self.epsilon {
            model = model.with_epsilon(eps)?;
        }
        Ok((model, self.table.load()?))
    }
}

#[derive(Subcommand)]
enum EmbedCommand {
    /// Train subword embeddings on a corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 2)]
        min_count: usize,
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        #[arg(long, default_value_t = 0.05)]
        learning_rate: f32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Load a vector file and look up tokens.
    Load {
        #[command(flatten)]
        table: TableArgs,
        tokens: Vec<String>,
    },
}

#[derive(Subcommand)]
enum LangidCommand {
    /// Cluster document embeddings.
    Fit {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Name clusters from anchor function words.
    Anchor {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated English anchors.
        #[arg(long, value_delimiter = ',')]
        en: Vec<String>,
        /// Comma-separated Hindi-English anchors.
        #[arg(long, value_delimiter = ',')]
        hindi: Vec<String>,
    },
    /// Label every token of a corpus.
    Label {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Most frequent tokens labeled neutral.
    Neutral {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 50)]
        top: usize,
    },
}

#[derive(Subcommand)]
enum CmiCommand {
    /// Estimate the code-mixing index of every comment.
    Score {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep comments at or above the threshold.
    Select {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Also write the per-comment reports.
        #[arg(long)]
        reports: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum HopeCommand {
    Train {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.03)]
        l2: f64,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 0.5)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_DECISION_THRESHOLD)]
        threshold: f64,
    },
    /// Score every comment.
    Predict {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        hope: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep predicted positives.
    Filter {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        hope: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Select, filter, extract and sample in one pass.
    Run {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        hope: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Batch output.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        cmi_threshold: f64,
        /// Query with the pool-language part of each seed only.
        #[arg(long, default_value_t = true, num_args = 0..=1, default_missing_value = "true", action = ArgAction::Set)]
        extract: bool,
        #[arg(long, default_value_t = 5)]
        size: usize,
        #[arg(long, default_value = "h_e")]
        pool: Subset,
        /// Stage report output.
        #[arg(long)]
        stages: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SampleCommand {
    /// Nearest unseen pool neighbors of each seed.
    Nn {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        size: usize,
        #[arg(long, default_value = "extracted")]
        variant: SeedVariant,
        #[arg(long, default_value = "h_e")]
        target: LanguageLabel,
        /// File of pool ids never to sample, one per line.
        #[arg(long)]
        exclude: Option<PathBuf>,
    },
    /// Uniform sample without replacement.
    Random {
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Token-level confusion between two label files.
    Confusion {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
    /// Fraction of a batch that is positive.
    Yield {
        #[arg(long)]
        batch: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Fleiss' kappa from rows of per-category counts.
    Kappa {
        #[arg(long)]
        ratings: PathBuf,
    },
    /// Two-dimensional PCA projection of document embeddings.
    Project {
        #[command(flatten)]
        table: TableArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Pool corpus.
    #[arg(long)]
    pool: PathBuf,
    /// Append-only label log.
    #[arg(long)]
    labels: PathBuf,
    /// Initial batch, used when the log has no rounds yet.
    #[arg(long)]
    batch: Option<PathBuf>,
    #[arg(long, default_value = "h_e")]
    target: LanguageLabel,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Ingest(args) => run_ingest(args),
        Command::Synth(args) => run_synth(args),
        Command::Embed(cmd) => run_embed(cmd),
        Command::Langid(cmd) => run_langid(cmd),
        Command::Cmi(cmd) => run_cmi(cmd),
        Command::Hope(cmd) => run_hope(cmd),
        Command::Pipeline(cmd) => run_pipeline_cmd(cmd),
        Command::Sample(cmd) => run_sample(cmd),
        Command::Eval(cmd) => run_eval(cmd),
        Command::Serve(args) => run_serve(args),
    }
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    let ingested =
        ingest(path, IngestOptions::default()).with_context(|| format!("reading {}", path.display()))?;
    for bad in &ingested.malformed {
        log::warn!("{}:{}: {}", path.display(), bad.line, bad.message);
    }
    Ok(ingested.corpus)
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

fn run_ingest(args: IngestArgs) -> Result<()> {
    let options = IngestOptions {
        format: args.format,
        default_subset: args.subset,
    };
    let ingested = ingest(&args.input, options).with_context(|| format!("reading {}", args.input.display()))?;
    for bad in &ingested.malformed {
        log::warn!("line {}: {}", bad.line, bad.message);
    }
    fs::create_dir_all(&args.out)?;
    ingested.corpus.write_jsonl(args.out.join("corpus.jsonl"))?;
    ingested.corpus.write_tokens(args.out.join("tokens.jsonl"))?;
    println!(
        "{} comments, {} malformed lines, {} empty after normalization",
        ingested.corpus.len(),
        ingested.malformed.len(),
        ingested.empty.len()
    );
    Ok(())
}

fn run_synth(args: SynthArgs) -> Result<()> {
    let mut generator = Generator::new(SynthConfig {
        seed: args.seed,
        mixed_fraction: args.mixed_fraction,
        positive_rate: args.positive_rate,
        mixed_positive_rate: args.positive_rate,
        ..SynthConfig::default()
    });
    let data = generator.corpus("corpus", args.n);
    let train = generator.english_training_set(args.train_n, args.train_positive_rate);
    fs::create_dir_all(&args.out)?;

    let gold_of = |set: &codebridge::synth::SynthCorpus| -> Vec<LabeledDoc> {
        set.corpus
            .iter()
            .map(|c| LabeledDoc {
                comment_id: c.id.clone(),
                label: set.gold(&c.id).expect("generated comment").positive,
            })
            .collect()
    };
    data.corpus.write_jsonl(args.out.join("corpus.jsonl"))?;
    write_labels(args.out.join("positives.jsonl"), &gold_of(&data))?;
    write_jsonl(
        &args.out.join("token_gold.jsonl"),
        data.corpus
            .iter()
            .map(|c| TokenLabeling::new(c.id.clone(), data.gold(&c.id).expect("generated comment").labels.clone())),
    )?;
    train.corpus.write_jsonl(args.out.join("hope_train.jsonl"))?;
    write_labels(args.out.join("hope_labels.jsonl"), &gold_of(&train))?;
    println!("{} comments and {} training comments in {}", data.len(), train.len(), args.out.display());
    Ok(())
}

fn run_embed(cmd: EmbedCommand) -> Result<()> {
    match cmd {
        EmbedCommand::Train {
            corpus,
            out,
            dim,
            window,
            epochs,
            min_count,
            negatives,
            learning_rate,
            seed,
        } => {
            let corpus = load_corpus(&corpus)?;
            let config = TrainConfig {
                dim,
                window,
                epochs,
                min_count,
                negatives,
                learning_rate,
                seed,
                ..TrainConfig::default()
            };
            let table = train_embeddings(&corpus, &config)?;
            table.save(&out)?;
            println!("{} tokens, dim {}, {} subwords", table.len(), table.dim(), table.subword_count());
        }
        EmbedCommand::Load { table, tokens } => {
            let table = table.load()?;
            println!("{} tokens, dim {}, {} subwords", table.len(), table.dim(), table.subword_count());
            for t in tokens {
                let v = table.token_vector(&t);
                println!("{t}\t{:?}\t{:.6}", v.resolution, v.vector.norm());
            }
        }
    }
    Ok(())
}

fn run_langid(cmd: LangidCommand) -> Result<()> {
    match cmd {
        LangidCommand::Fit {
            table,
            corpus,
            out,
            k,
            seed,
            epsilon,
        } => {
            let table = table.load()?;
            let corpus = load_corpus(&corpus)?;
            let vectors: Vec<_> = corpus.iter().map(|c| table.doc_embedding(&c.tokens).vector).collect();
            let model = fit_clusters(&vectors, k, seed)?.with_epsilon(epsilon)?;
            let model = match anchor_clusters(&model, &Anchors::default_function_words(), &table) {
                Ok(anchored) => anchored,
                Err(e) => {
                    log::warn!("model left unanchored: {e}");
                    model
                }
            };
            model.save(&out)?;
            println!("{} clusters, anchored: {}", model.k(), model.is_anchored());
        }
        LangidCommand::Anchor {
            table,
            model,
            out,
            en,
            hindi,
        } => {
            let table = table.load()?;
            let defaults = Anchors::default_function_words();
            let anchors = Anchors {
                en: if en.is_empty() { defaults.en } else { en },
                hindi: if hindi.is_empty() { defaults.hindi } else { hindi },
            };
            let anchored = anchor_clusters(&ClusterModel::load(&model)?, &anchors, &table)?;
            anchored.save(&out)?;
            let map = anchored.label_map().expect("just anchored");
            println!("en = cluster {}, h_e = cluster {}", map.en, map.hindi);
        }
        LangidCommand::Label { model, corpus, out } => {
            let (model, table) = model.load()?;
            let corpus = load_corpus(&corpus)?;
            let mut labeler = TokenLabeler::new(&model, &table)?;
            write_jsonl(&out, corpus.iter().map(|c| labeler.label_comment(c)))?;
        }
        LangidCommand::Neutral { model, corpus, top } => {
            let (model, table) = model.load()?;
            let corpus = load_corpus(&corpus)?;
            for (token, count) in neutral_lexicon(&model, &table, &corpus, top)? {
                println!("{token}\t{count}");
            }
        }
    }
    Ok(())
}

fn run_cmi(cmd: CmiCommand) -> Result<()> {
    match cmd {
        CmiCommand::Score { model, corpus, out } => {
            let (model, table) = model.load()?;
            let corpus = load_corpus(&corpus)?;
            write_reports(&out, &score_corpus(&model, &table, &corpus)?)?;
        }
        CmiCommand::Select {
            model,
            corpus,
            out,
            threshold,
            reports,
        } => {
            let (model, table) = model.load()?;
            let corpus = load_corpus(&corpus)?;
            let selection = select_code_mixed(&corpus, &model, &table, threshold)?;
            selection.selected.write_jsonl(&out)?;
            if let Some(path) = reports {
                write_reports(path, &selection.reports)?;
            }
            println!("{} of {} comments selected", selection.selected.len(), corpus.len());
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct PredictionRecord<'a> {
    id: &'a str,
    score: f64,
    positive: bool,
}

fn run_hope(cmd: HopeCommand) -> Result<()> {
    match cmd {
        HopeCommand::Train {
            table,
            corpus,
            labels,
            out,
            l2,
            epochs,
            learning_rate,
            seed,
            threshold,
        } => {
            let table = table.load()?;
            let corpus = load_corpus(&corpus)?;
            let labels = read_labels(&labels)?;
            let config = HopeTrainConfig {
                l2,
                epochs,
                learning_rate,
                seed,
                ..HopeTrainConfig::default()
            };
            let model = train_hope_classifier(&table, &corpus, &labels, &config)?.with_threshold(threshold)?;
            model.save(&out)?;
        }
        HopeCommand::Predict {
            table,
            hope,
            corpus,
            out,
        } => {
            let table = table.load()?;
            let model = HopeModel::load(&hope)?;
            let corpus = load_corpus(&corpus)?;
            write_jsonl(
                &out,
                corpus.iter().map(|c| {
                    let p = model.predict(&table, c);
                    PredictionRecord {
                        id: &c.id,
                        score: p.score,
                        positive: p.positive,
                    }
                }),
            )?;
        }
        HopeCommand::Filter {
            table,
            hope,
            corpus,
            out,
        } => {
            let table = table.load()?;
            let model = HopeModel::load(&hope)?;
            let corpus = load_corpus(&corpus)?;
            let selection = filter_hope(&model, &table, &corpus);
            selection.selected.write_jsonl(&out)?;
            println!("{} of {} comments predicted positive", selection.selected.len(), corpus.len());
        }
    }
    Ok(())
}

fn run_pipeline_cmd(cmd: PipelineCommand) -> Result<()> {
    let PipelineCommand::Run {
        model,
        hope,
        corpus,
        out,
        cmi_threshold,
        extract,
        size,
        pool,
        stages,
    } = cmd;
    let (model, table) = model.load()?;
    let hope = HopeModel::load(&hope)?;
    let corpus = load_corpus(&corpus)?;
    let config = PipelineConfig {
        cmi_threshold,
        extract,
        size,
        pool,
    };
    let run = run_pipeline(&corpus, &model, &table, &hope, &config)?;
    run.batch.save(&out)?;
    for stage in &run.stages {
        println!("{stage}");
    }
    if let Some(path) = stages {
        write_jsonl(&path, &run.stages)?;
    }
    if !run.skipped_seeds.is_empty() {
        log::info!("{} seeds had no usable tokens", run.skipped_seeds.len());
    }
    for s in &run.shortfalls {
        log::warn!("seed {} added {} of {}", s.seed_id, s.added, s.requested);
    }
    Ok(())
}

fn run_sample(cmd: SampleCommand) -> Result<()> {
    match cmd {
        SampleCommand::Nn {
            model,
            seeds,
            pool,
            out,
            size,
            variant,
            target,
            exclude,
        } => {
            let (model, table) = model.load()?;
            let seeds = load_corpus(&seeds)?;
            let pool = load_corpus(&pool)?;
            let exclude: HashSet<String> = match exclude {
                Some(path) => fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect(),
                None => HashSet::new(),
            };
            let seed_set = build_seeds(seeds.iter(), variant, &model, &table, target)?;
            ensure!(!seed_set.seeds.is_empty(), "no seed has a usable query vector");
            let index = build_index(&pool, &table)?;
            let outcome = nn_sample(seeds.name(), &seed_set.seeds, &index, size, &exclude)?;
            outcome.batch.save(&out)?;
            println!("{} pool comments from {} seeds", outcome.batch.len(), seed_set.seeds.len());
        }
        SampleCommand::Random { pool, out, n, seed } => {
            let pool = load_corpus(&pool)?;
            random_sample(&pool, n, seed)?.write_jsonl(&out)?;
        }
    }
    Ok(())
}

fn run_eval(cmd: EvalCommand) -> Result<()> {
    match cmd {
        EvalCommand::Confusion { gold, pred } => {
            let gold: Vec<TokenLabeling> = read_jsonl(&gold)?;
            let pred: HashMap<String, TokenLabeling> = read_jsonl::<TokenLabeling>(&pred)?
                .into_iter()
                .map(|l| (l.comment_id.clone(), l))
                .collect();
            let (mut g, mut p) = (Vec::new(), Vec::new());
            for labeling in gold {
                let Some(other) = pred.get(&labeling.comment_id) else {
                    bail!("no prediction for comment {}", labeling.comment_id);
                };
                ensure!(
                    other.labels.len() == labeling.labels.len(),
                    "comment {} has {} gold and {} predicted labels",
                    labeling.comment_id,
                    labeling.labels.len(),
                    other.labels.len()
                );
                g.extend(labeling.labels);
                p.extend(other.labels.iter().copied());
            }
            let m = confusion_matrix(&g, &p)?;
            println!("{m}");
        }
        EvalCommand::Yield { batch, labels } => {
            let batch = SampleBatch::load(&batch, "batch")?;
            let labels: HashMap<String, bool> =
                read_labels(&labels)?.into_iter().map(|d| (d.comment_id, d.label)).collect();
            println!("{:.4}", sampling_yield(&batch, &labels)?);
        }
        EvalCommand::Kappa { ratings } => {
            let text = fs::read_to_string(&ratings).with_context(|| format!("reading {}", ratings.display()))?;
            let rows = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| l.split_whitespace().map(str::parse).collect::<Result<Vec<u32>, _>>())
                .collect::<Result<Vec<_>, _>>()
                .context("ratings rows must be whitespace-separated counts")?;
            println!("{:.4}", fleiss_kappa(&rows)?);
        }
        EvalCommand::Project { table, corpus, out } => {
            let table = table.load()?;
            let corpus = load_corpus(&corpus)?;
            let vectors: Vec<_> = corpus.iter().map(|c| table.doc_embedding(&c.tokens).vector).collect();
            let points = project_2d(&vectors)?;
            #[derive(Serialize)]
            struct Point<'a> {
                id: &'a str,
                x: f64,
                y: f64,
            }
            write_jsonl(
                &out,
                corpus.iter().zip(points).map(|(c, (x, y))| Point { id: &c.id, x, y }),
            )?;
        }
    }
    Ok(())
}

fn run_serve(args: ServeArgs) -> Result<()> {
    let (model, table) = args.model.load()?;
    let pool = load_corpus(&args.pool)?;
    let initial = args
        .batch
        .as_ref()
        .map(|p| SampleBatch::load(p, "D_hope"))
        .transpose()?;
    let context = AnnotationContext::new(pool, model, table, args.target, Vec::new())?;
    let service = Arc::new(Service::open(context, &args.labels, initial)?);
    let addr = SocketAddr::new(args.host, service::port_from_env()?);
    tokio::runtime::Runtime::new()?.block_on(service::serve(service, addr))?;
    Ok(())
}
