//! Command-line entry point.
//!
//! Settings resolve as: command-line flags, then the `--config` TOML file,
//! then built-in defaults. One top-level seed feeds every random stream.
//! Outputs go to `--out`, or to `$TEXTMANIP_DATA_DIR/<command>` (current
//! directory when unset).

use std::collections::BTreeSet;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use textmanip_core::annotation::{agreement_report, sample_study, Entry};
use textmanip_core::corpus::{normalize_category, split_articles, Split};
use textmanip_core::datagen::{assemble_balanced, assemble_exhaustive, pos_stats, DatasetRecord};
use textmanip_core::detect::{
    compose_training, evaluate, train_linear, ClaimRecord, LabelMapping, LinearModel, Setting, TrainParams,
};
use textmanip_core::{CategoryMap, ManipulationConfig, SplitRatios};

use crate::formats::categories::load_category_map;
use crate::formats::claims::{load_claims, write_claims};
use crate::formats::jsonl::{read_articles, read_jsonl, write_jsonl};
use crate::formats::pos::parse_pos_corpus;
use crate::formats::vectors::load_vectors;
use crate::formats::open;
use crate::generate::generate_parallel;
use crate::run::RunDir;
use crate::service::{serve, AppState};
use crate::store::{read_entries, read_tasks, LabelStore};

pub const DATA_DIR_ENV: &str = "TEXTMANIP_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "textmanip", version, about = "Generate, annotate and detect machine-manipulated news text")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file with defaults for any setting
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory for this run
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for every random choice
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Parent of default output directories
    #[arg(long, global = true, env = DATA_DIR_ENV, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled human/machine dataset from a POS corpus
    Generate(GenerateArgs),
    /// Per-tag manipulation statistics of a dataset
    Stats(StatsArgs),
    /// Normalize categories and split articles into train/dev/test
    Split(SplitArgs),
    /// Draw the two-stage annotation study from a dataset
    SampleStudy(SampleStudyArgs),
    /// Serve annotation tasks over HTTP
    ServeAnnotation(ServeArgs),
    /// Inter-annotator agreement from label logs
    Agreement(AgreementArgs),
    /// Train the n-gram logistic regression baseline
    TrainBaseline(TrainArgs),
    /// Evaluate a trained model
    Evaluate(EvaluateArgs),
    /// Build a training set for the baseline, zero-shot or augment setting
    ComposeTraining(ComposeArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Stats(_) => "stats",
            Command::Split(_) => "split",
            Command::SampleStudy(_) => "sample-study",
            Command::ServeAnnotation(_) => "serve-annotation",
            Command::Agreement(_) => "agreement",
            Command::TrainBaseline(_) => "train-baseline",
            Command::Evaluate(_) => "evaluate",
            Command::ComposeTraining(_) => "compose-training",
        }
    }
}

fn parse_ratios(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let [a, b, c] = parts[..] else { return Err("expected three comma-separated fractions".into()) };
    SplitRatios::new(a, b, c).map_err(|e| e.to_string())?;
    Ok([a, b, c])
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once(',') {
        Some((a, b)) if !a.trim().is_empty() && !b.trim().is_empty() => Ok((a.trim().into(), b.trim().into())),
        _ => Err("expected two comma-separated annotator ids".into()),
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected LOW,HIGH")?;
    Ok((a.trim().parse().map_err(|_| "bad LOW")?, b.trim().parse().map_err(|_| "bad HIGH")?))
}

fn parse_setting(s: &str) -> Result<Setting, String> {
    s.parse()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mapping {
    MachineIsFake,
    MachineIsTrue,
}

impl From<Mapping> for LabelMapping {
    fn from(m: Mapping) -> Self {
        match m {
            Mapping::MachineIsFake => LabelMapping::MachineIsFake,
            Mapping::MachineIsTrue => LabelMapping::MachineIsTrue,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitFilter {
    Train,
    Dev,
    Test,
    All,
}

impl SplitFilter {
    fn keep(self, split: Split) -> bool {
        match self {
            SplitFilter::All => true,
            SplitFilter::Train => split == Split::Train,
            SplitFilter::Dev => split == Split::Dev,
            SplitFilter::Test => split == Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// POS-tagged corpus (`surface<TAB>tag`, blank line between sentences)
    #[arg(long)]
    pub corpus: PathBuf,
    /// Word vectors in `.vec` text format
    #[arg(long)]
    pub vectors: PathBuf,
    /// Records per class (balanced mode)
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Train,dev,test fractions
    #[arg(long, value_parser = parse_ratios)]
    pub ratios: Option<[f64; 3]>,
    /// Tags to manipulate, comma separated
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    /// Skip neighbors whose character ratio exceeds this
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Substitutes kept per token
    #[arg(long)]
    pub candidates: Option<usize>,
    /// Random replacements per number
    #[arg(long)]
    pub number_variants: Option<usize>,
    /// Cap on variants per sentence
    #[arg(long)]
    pub max_variants: Option<usize>,
    /// Neighbors inspected per token
    #[arg(long)]
    pub scan_limit: Option<usize>,
    /// Worker threads for generation
    #[arg(long)]
    pub workers: Option<usize>,
    /// Keep every variant instead of sampling a balanced set
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Articles JSONL
    #[arg(long)]
    pub articles: PathBuf,
    /// `raw<TAB>canonical` category map
    #[arg(long)]
    pub category_map: Option<PathBuf>,
    #[arg(long, value_parser = parse_ratios)]
    pub ratios: Option<[f64; 3]>,
}

#[derive(Debug, Args)]
pub struct SampleStudyArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub n_human: Option<usize>,
    #[arg(long)]
    pub n_machine: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Tasks written by `sample-study`
    #[arg(long)]
    pub tasks: PathBuf,
    /// Label log; defaults to `labels.jsonl` in the output directory
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Annotators compared by the agreement endpoint, `A,B`
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<(String, String)>,
}

#[derive(Debug, Args)]
pub struct AgreementArgs {
    /// One or more label logs
    #[arg(long, num_args = 1.., required = true)]
    pub labels: Vec<PathBuf>,
    /// Annotators to compare, `A,B`
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<(String, String)>,
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false)]
pub struct DataSource {
    /// Dataset JSONL (human/machine labels)
    #[arg(long, group = "source")]
    pub dataset: Option<PathBuf>,
    /// Claims TSV (true/fake labels)
    #[arg(long, group = "source")]
    pub claims: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: DataSource,
    /// Dataset split to train on
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitFilter,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Character n-gram range, `LOW,HIGH`
    #[arg(long, value_parser = parse_range)]
    pub ngram: Option<(usize, usize)>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub source: DataSource,
    /// Dataset split to evaluate on
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitFilter,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    /// baseline, zero_shot or augment
    #[arg(long, value_parser = parse_setting)]
    pub setting: Setting,
    /// Gold training claims (TSV)
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Generated dataset (JSONL)
    #[arg(long)]
    pub generated: Option<PathBuf>,
    /// Multiple of the distinct generated texts added in augment
    #[arg(long)]
    pub factor: Option<usize>,
    #[arg(long, value_enum, default_value = "machine-is-fake")]
    pub mapping: Mapping,
    /// Generated split to draw from
    #[arg(long, value_enum, default_value = "train")]
    pub split: SplitFilter,
}

/// Settings accepted in the `--config` file.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub per_class: Option<usize>,
    pub ratios: Option<[f64; 3]>,
    pub workers: Option<usize>,
    pub n_human: Option<usize>,
    pub n_machine: Option<usize>,
    pub factor: Option<usize>,
    pub manipulation: Option<ManipulationConfig>,
    pub train: Option<TrainParams>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

struct Ctx {
    file: FileConfig,
    seed: u64,
    run: RunDir,
}

impl Ctx {
    fn new(common: &Common, command: &str) -> Result<Self> {
        let file = match &common.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let seed = common.seed.or(file.seed).unwrap_or(0);
        let out = match &common.out {
            Some(o) => o.clone(),
            None => common.data_dir.clone().unwrap_or_else(|| PathBuf::from(".")).join(command),
        };
        let mut run = RunDir::create(&out, command)?;
        if let Some(p) = &common.config {
            run.input(p)?;
        }
        Ok(Self { file, seed, run })
    }

    fn ratios(&self, flag: Option<[f64; 3]>) -> Result<SplitRatios> {
        match flag.or(self.file.ratios) {
            Some([a, b, c]) => Ok(SplitRatios::new(a, b, c)?),
            None => Ok(SplitRatios::default()),
        }
    }
}

fn read_dataset(run: &mut RunDir, path: &Path) -> Result<Vec<DatasetRecord>> {
    run.input(path)?;
    read_jsonl(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn read_claims(run: &mut RunDir, path: &Path) -> Result<Vec<ClaimRecord>> {
    run.input(path)?;
    let claims = load_claims(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    log::info!("{}: {} claims", path.display(), claims.len());
    Ok(claims)
}

/// Parses arguments and runs the command. Returns the process exit code:
/// 0 on success, 2 on usage errors, 1 on any other failure.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code().clamp(0, 255) as u8;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let name = cli.command.name();
    let ctx = Ctx::new(&cli.common, name)?;
    match cli.command {
        Command::Generate(a) => cmd_generate(ctx, a),
        Command::Stats(a) => cmd_stats(ctx, a),
        Command::Split(a) => cmd_split(ctx, a),
        Command::SampleStudy(a) => cmd_sample_study(ctx, a),
        Command::ServeAnnotation(a) => cmd_serve(ctx, a),
        Command::Agreement(a) => cmd_agreement(ctx, a),
        Command::TrainBaseline(a) => cmd_train(ctx, a),
        Command::Evaluate(a) => cmd_evaluate(ctx, a),
        Command::ComposeTraining(a) => cmd_compose(ctx, a),
    }
}

#[derive(Serialize)]
struct GenerateEcho<'a> {
    corpus: &'a Path,
    vectors: &'a Path,
    seed: u64,
    mode: &'static str,
    per_class: Option<usize>,
    ratios: SplitRatios,
    workers: usize,
    manipulation: &'a ManipulationConfig,
}

fn cmd_generate(mut ctx: Ctx, a: GenerateArgs) -> Result<()> {
    let mut cfg = ctx.file.manipulation.clone().unwrap_or_default();
    if let Some(t) = &a.targets {
        cfg.target_pos = t.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    cfg.ratio_threshold = a.threshold.unwrap_or(cfg.ratio_threshold);
    cfg.candidates_per_token = a.candidates.unwrap_or(cfg.candidates_per_token);
    cfg.number_variants = a.number_variants.unwrap_or(cfg.number_variants);
    cfg.max_variants_per_sentence = a.max_variants.unwrap_or(cfg.max_variants_per_sentence);
    cfg.neighbor_scan_limit = a.scan_limit.unwrap_or(cfg.neighbor_scan_limit);
    cfg.seed = ctx.seed;
    cfg.validate()?;
    let ratios = ctx.ratios(a.ratios)?;
    let workers = a
        .workers
        .or(ctx.file.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    ctx.run.input(&a.corpus)?;
    ctx.run.input(&a.vectors)?;
    let sentences =
        parse_pos_corpus(open(&a.corpus)?).with_context(|| format!("reading {}", a.corpus.display()))?;
    let (index, warnings) =
        load_vectors(open(&a.vectors)?).with_context(|| format!("reading {}", a.vectors.display()))?;
    log::info!("{} sentences, {} vectors of dim {}", sentences.len(), index.len(), index.dim());
    for w in warnings.iter().take(5) {
        log::warn!("{}: {}", w.code, w.detail);
    }
    if warnings.len() > 5 {
        log::warn!("{} more vector warnings", warnings.len() - 5);
    }

    let variants = generate_parallel(&sentences, &index, &cfg, workers)?;
    let generatable = variants.iter().filter(|v| !v.is_empty()).count();
    log::info!("{generatable} of {} sentences have at least one variant", sentences.len());

    let (per_class, (records, stats)) = if a.exhaustive {
        (None, assemble_exhaustive(&sentences, &variants, ratios, ctx.seed)?)
    } else {
        let n = a.per_class.or(ctx.file.per_class).unwrap_or_else(|| generatable.min(sentences.len() / 2).max(1));
        (Some(n), assemble_balanced(&sentences, &variants, n, ratios, ctx.seed)?)
    };
    ctx.run.write("dataset.jsonl", |w| write_jsonl(w, &records))?;
    ctx.run.write_json("stats.json", &stats)?;
    log::info!("wrote {} records to {}", records.len(), ctx.run.root().display());

    let echo = GenerateEcho {
        corpus: &a.corpus,
        vectors: &a.vectors,
        seed: ctx.seed,
        mode: if a.exhaustive { "exhaustive" } else { "balanced" },
        per_class,
        ratios,
        workers,
        manipulation: &cfg,
    };
    ctx.run.finish(&echo)
}

fn cmd_stats(mut ctx: Ctx, a: StatsArgs) -> Result<()> {
    let records = read_dataset(&mut ctx.run, &a.dataset)?;
    ctx.run.write_json("stats.json", &pos_stats(&records))?;
    ctx.run.finish(&serde_json::json!({ "dataset": a.dataset }))
}

fn cmd_split(mut ctx: Ctx, a: SplitArgs) -> Result<()> {
    let ratios = ctx.ratios(a.ratios)?;
    let map = match &a.category_map {
        Some(p) => {
            ctx.run.input(p)?;
            load_category_map(open(p)?).with_context(|| format!("reading {}", p.display()))?
        }
        None => CategoryMap::default(),
    };
    ctx.run.input(&a.articles)?;
    let mut articles = read_articles(open(&a.articles)?).with_context(|| format!("reading {}", a.articles.display()))?;
    let mut warnings = Vec::new();
    for art in &mut articles {
        art.topic = normalize_category(&art.topic, &map, &mut warnings).as_str().to_string();
    }
    if !warnings.is_empty() {
        log::warn!("{} articles have unmapped categories", warnings.len());
    }
    let splits = split_articles(articles, ratios, ctx.seed)?;
    ctx.run.write("train.jsonl", |w| write_jsonl(w, &splits.train))?;
    ctx.run.write("dev.jsonl", |w| write_jsonl(w, &splits.dev))?;
    ctx.run.write("test.jsonl", |w| write_jsonl(w, &splits.test))?;
    ctx.run.write("warnings.jsonl", |w| write_jsonl(w, &warnings))?;
    log::info!("split {}/{}/{}", splits.train.len(), splits.dev.len(), splits.test.len());
    ctx.run.finish(&serde_json::json!({
        "articles": a.articles,
        "category_map": a.category_map,
        "ratios": ratios,
        "seed": ctx.seed,
    }))
}

fn cmd_sample_study(mut ctx: Ctx, a: SampleStudyArgs) -> Result<()> {
    let n_human = a.n_human.or(ctx.file.n_human).unwrap_or(145);
    let n_machine = a.n_machine.or(ctx.file.n_machine).unwrap_or(155);
    let records = read_dataset(&mut ctx.run, &a.dataset)?;
    let tasks = sample_study(&records, n_human, n_machine, ctx.seed)?;
    ctx.run.write("tasks.jsonl", |w| write_jsonl(w, &tasks))?;
    log::info!("{} stage-1 and {} stage-2 tasks", n_human + n_machine, n_machine);
    ctx.run.finish(&serde_json::json!({
        "dataset": a.dataset,
        "n_human": n_human,
        "n_machine": n_machine,
        "seed": ctx.seed,
    }))
}

fn cmd_serve(mut ctx: Ctx, a: ServeArgs) -> Result<()> {
    ctx.run.input(&a.tasks)?;
    let tasks = read_tasks(&a.tasks)?;
    let labels = match a.labels {
        Some(p) => p,
        None => ctx.run.output("labels.jsonl")?,
    };
    let store = LabelStore::open(tasks, &labels)?;
    log::info!("{} labels loaded from {}", store.book().audit().len(), labels.display());
    let echo = serde_json::json!({
        "tasks": a.tasks,
        "labels": labels,
        "bind": a.bind.to_string(),
        "pair": a.pair,
    });
    let state = Arc::new(AppState::new(store, a.pair));
    // The log grows while serving, so the manifest is written up front.
    ctx.run.finish(&echo)?;
    tokio::runtime::Runtime::new()?.block_on(serve(state, a.bind))
}

fn cmd_agreement(mut ctx: Ctx, a: AgreementArgs) -> Result<()> {
    let mut per_file: Vec<Vec<Entry>> = Vec::new();
    for p in &a.labels {
        ctx.run.input(p)?;
        per_file.push(read_entries(open(p)?).with_context(|| format!("reading {}", p.display()))?);
    }
    let annotators =
        |entries: &[Entry]| entries.iter().map(|e| e.annotator().to_string()).collect::<BTreeSet<String>>();
    let pair = match a.pair.clone() {
        Some(p) => p,
        None => {
            let sets: Vec<BTreeSet<String>> = per_file.iter().map(|f| annotators(f)).collect();
            match &sets[..] {
                [x, y] if x.len() == 1 && y.len() == 1 && x != y => {
                    (x.iter().next().cloned().unwrap_or_default(), y.iter().next().cloned().unwrap_or_default())
                }
                _ => {
                    let all: BTreeSet<String> = sets.into_iter().flatten().collect();
                    let mut it = all.into_iter();
                    match (it.next(), it.next()) {
                        (Some(x), Some(y)) => (x, y),
                        _ => bail!("agreement needs labels from two annotators"),
                    }
                }
            }
        }
    };
    let entries: Vec<&Entry> = per_file.iter().flatten().collect();
    let report = agreement_report(entries, &pair.0, &pair.1);
    log::info!(
        "{} vs {}: kappa stage 1 = {:?}, stage 2 = {:?}",
        report.annotator_a,
        report.annotator_b,
        report.kappa_stage1,
        report.kappa_stage2
    );
    ctx.run.write_json("agreement.json", &report)?;
    ctx.run.finish(&serde_json::json!({ "labels": a.labels, "pair": [pair.0, pair.1] }))
}

/// Texts and label strings from either input kind.
fn labeled_texts(run: &mut RunDir, source: &DataSource, split: SplitFilter) -> Result<(Vec<String>, Vec<String>)> {
    if let Some(p) = &source.dataset {
        let records = read_dataset(run, p)?;
        Ok(records.into_iter().filter(|r| split.keep(r.split)).map(|r| (r.text, r.label.as_str().to_string())).unzip())
    } else if let Some(p) = &source.claims {
        let claims = read_claims(run, p)?;
        Ok(claims.into_iter().map(|c| (c.text, c.label.as_str().to_string())).unzip())
    } else {
        bail!("give --dataset or --claims")
    }
}

fn cmd_train(mut ctx: Ctx, a: TrainArgs) -> Result<()> {
    let mut params = ctx.file.train.unwrap_or_default();
    params.epochs = a.epochs.unwrap_or(params.epochs);
    params.learning_rate = a.learning_rate.unwrap_or(params.learning_rate);
    params.n_range = a.ngram.unwrap_or(params.n_range);
    params.seed = ctx.seed;
    let (texts, labels) = labeled_texts(&mut ctx.run, &a.source, a.split)?;
    let t: Vec<&str> = texts.iter().map(String::as_str).collect();
    let l: Vec<&str> = labels.iter().map(String::as_str).collect();
    let model = train_linear(&t, &l, params)?;
    log::info!("trained on {} examples, final loss {:?}", t.len(), model.loss_history().last());
    ctx.run.write("model.json", |w| serde_json::to_writer(&mut *w, &model).map_err(Into::into))?;
    ctx.run.finish(&serde_json::json!({
        "dataset": a.source.dataset,
        "claims": a.source.claims,
        "split": a.split,
        "params": params,
    }))
}

fn cmd_evaluate(mut ctx: Ctx, a: EvaluateArgs) -> Result<()> {
    ctx.run.input(&a.model)?;
    let model: LinearModel =
        serde_json::from_reader(open(&a.model)?).with_context(|| format!("reading {}", a.model.display()))?;
    let (texts, golds) = labeled_texts(&mut ctx.run, &a.source, a.split)?;
    let preds: Vec<&str> = texts.iter().map(|t| model.predict(t)).collect();
    let g: Vec<&str> = golds.iter().map(String::as_str).collect();
    let report = evaluate(&preds, &g, &model.classes())?;
    log::info!("accuracy {:.4}, macro F1 {:.4} on {} examples", report.accuracy, report.macro_f1, report.n);
    ctx.run.write_json("report.json", &report)?;
    ctx.run.finish(&serde_json::json!({
        "model": a.model,
        "dataset": a.source.dataset,
        "claims": a.source.claims,
        "split": a.split,
    }))
}

fn cmd_compose(mut ctx: Ctx, a: ComposeArgs) -> Result<()> {
    let factor = a.factor.or(ctx.file.factor).unwrap_or(2);
    let gold = match &a.gold {
        Some(p) => Some(read_claims(&mut ctx.run, p)?),
        None => None,
    };
    let generated: Vec<DatasetRecord> = match &a.generated {
        Some(p) => read_dataset(&mut ctx.run, p)?.into_iter().filter(|r| a.split.keep(r.split)).collect(),
        None if a.setting == Setting::Baseline => Vec::new(),
        None => bail!("--generated is required for this setting"),
    };
    let out = compose_training(a.setting, gold.as_deref(), &generated, factor, a.mapping.into())?;
    log::info!("{} training examples", out.len());
    ctx.run.write("training.tsv", |w| write_claims(w, &out))?;
    ctx.run.finish(&serde_json::json!({
        "setting": a.setting,
        "gold": a.gold,
        "generated": a.generated,
        "factor": factor,
        "mapping": LabelMapping::from(a.mapping),
        "split": a.split,
        "seed": ctx.seed,
    }))
}
