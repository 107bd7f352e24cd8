//! Command-line entry points: train, eval, cluster, export and recover.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, filter_vocabulary, kfold, split_train_test, Corpus, Split};
use crate::error::{Error, Result};
use crate::eval::{self, EvalReport, Predictor};
use crate::export;
use crate::model::{init_model, Eta, ModelConfig, ScntmModel};
use crate::sampler::{ChainStats, IterationStats, Sampler, SamplerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Linqs,
    Jsonl,
}

/// Every setting of a run; echoed into each output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub data: PathBuf,
    pub format: Format,
    pub eta: Eta,
    pub topics: usize,
    pub iterations: usize,
    pub network_start: usize,
    pub repeats: usize,
    pub folds: usize,
    pub seed: u64,
    pub test_frac: f64,
    pub samples: usize,
    pub out: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub common_frac: f64,
    pub rare_count: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: PathBuf::from("data"),
            format: Format::Linqs,
            eta: Eta::Finite(0),
            topics: 20,
            iterations: 2000,
            network_start: 1000,
            repeats: 1,
            folds: 1,
            seed: 1,
            test_frac: 0.1,
            samples: eval::DEFAULT_SAMPLES,
            out: PathBuf::from("runs"),
            stopwords: None,
            common_frac: 1.0,
            rare_count: 0,
        }
    }
}

impl RunConfig {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            eta: self.eta,
            max_topics: self.topics,
            ..Default::default()
        }
    }

    pub fn sampler_config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            iterations: self.iterations,
            network_start: self.network_start,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> std::result::Result<(), CliError> {
        if self.folds == 0 {
            return Err(CliError::Usage("folds must be at least 1".into()));
        }
        if self.repeats == 0 {
            return Err(CliError::Usage("repeats must be at least 1".into()));
        }
        if self.topics == 0 {
            return Err(CliError::Usage("topics must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(CliError::Usage("samples must be at least 1".into()));
        }
        if self.network_start > self.iterations {
            return Err(CliError::Usage(format!(
                "network-start ({}) exceeds iterations ({})",
                self.network_start, self.iterations
            )));
        }
        require_path(&self.data)?;
        if let Some(p) = &self.stopwords {
            require_path(p)?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] Error),
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Model(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Model(_) => 1,
        }
    }
}

fn require_path(path: &Path) -> std::result::Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("path does not exist: {}", path.display())))
    }
}

#[derive(Debug, Parser)]
#[command(name = "scntm", version, about = "Supervised citation network topic model")]
pub struct Cli {
    /// JSON file with run settings; flags and SCNTM_* variables override it.
    #[arg(long, global = true, env = "SCNTM_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one chain per (repeat, fold) and write checkpoints and traces.
    Train(RunArgs),
    /// Evaluate every run under a training output directory.
    Eval(EvalArgs),
    /// Hard-cluster the training documents of a checkpoint by dominant topic.
    Cluster(ClusterArgs),
    /// Write the author-topic graph and topic word lists of a checkpoint.
    Export(ExportArgs),
    /// Recover integer counts from a TF-IDF matrix.
    Recover(RecoverArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Directory holding `*.content` + `*.cites` (linqs) or `*.jsonl` + `cites.txt` (jsonl).
    #[arg(long, env = "SCNTM_DATA")]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum, env = "SCNTM_FORMAT")]
    pub format: Option<Format>,
    /// Author threshold: a non-negative integer or `inf`.
    #[arg(long, env = "SCNTM_ETA")]
    pub eta: Option<Eta>,
    /// Topic cap.
    #[arg(long, env = "SCNTM_TOPICS")]
    pub topics: Option<usize>,
    #[arg(long, env = "SCNTM_ITERS")]
    pub iters: Option<usize>,
    #[arg(long, env = "SCNTM_NETWORK_START")]
    pub network_start: Option<usize>,
    #[arg(long, env = "SCNTM_REPEATS")]
    pub repeats: Option<usize>,
    /// 1 for a single train/test split, otherwise k-fold cross-validation.
    #[arg(long, env = "SCNTM_FOLDS")]
    pub folds: Option<usize>,
    #[arg(long, env = "SCNTM_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "SCNTM_TEST_FRAC")]
    pub test_frac: Option<f64>,
    /// Monte Carlo samples per test document.
    #[arg(long, env = "SCNTM_SAMPLES")]
    pub samples: Option<usize>,
    #[arg(long, env = "SCNTM_OUT")]
    pub out: Option<PathBuf>,
    /// Newline-separated words to drop.
    #[arg(long, env = "SCNTM_STOPWORDS")]
    pub stopwords: Option<PathBuf>,
    /// Drop words appearing in more than this fraction of documents.
    #[arg(long, env = "SCNTM_COMMON_FRAC")]
    pub common_frac: Option<f64>,
    /// Drop words occurring fewer than this many times.
    #[arg(long, env = "SCNTM_RARE_COUNT")]
    pub rare_count: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Training output directory (or a single run directory).
    #[arg(long, env = "SCNTM_RUNS")]
    pub runs: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Output file of `id<TAB>topic<TAB>category` rows.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Graph output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of most influential authors to include.
    #[arg(long, default_value_t = 20)]
    pub authors: usize,
    /// Drop author-topic edges below this proportion.
    #[arg(long, default_value_t = export::DEFAULT_EDGE_THRESHOLD)]
    pub threshold: f64,
    /// Words per topic written to `--words-out`.
    #[arg(long, default_value_t = 10)]
    pub top_words: usize,
    #[arg(long)]
    pub words_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RecoverArgs {
    /// Whitespace-separated TF-IDF matrix, one document per line.
    #[arg(long)]
    pub tfidf: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Layer defaults, the config file, then flags and environment variables.
pub fn resolve_config(file: Option<&Path>, args: &RunArgs) -> std::result::Result<RunConfig, CliError> {
    let mut config = match file {
        Some(path) => {
            require_path(path)?;
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    macro_rules! apply {
        ($($field:ident <- $arg:ident),* $(,)?) => {
            $(if let Some(v) = args.$arg.clone() { config.$field = v; })*
        };
    }
    apply!(
        data <- data,
        format <- format,
        eta <- eta,
        topics <- topics,
        iterations <- iters,
        network_start <- network_start,
        repeats <- repeats,
        folds <- folds,
        seed <- seed,
        test_frac <- test_frac,
        samples <- samples,
        out <- out,
        common_frac <- common_frac,
        rare_count <- rare_count,
    );
    if args.stopwords.is_some() {
        config.stopwords = args.stopwords.clone();
    }
    Ok(config)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn find_one(dir: &Path, pred: impl Fn(&str) -> bool, what: &str) -> std::result::Result<PathBuf, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(&pred))
        .collect();
    found.sort();
    match found.len() {
        1 => Ok(found.remove(0)),
        0 => Err(CliError::Usage(format!("no {what} file in {}", dir.display()))),
        _ => Err(CliError::Usage(format!("several {what} files in {}", dir.display()))),
    }
}

/// Load the corpus named by the config and apply vocabulary filtering.
pub fn load_corpus(config: &RunConfig) -> std::result::Result<Corpus, CliError> {
    require_path(&config.data)?;
    let dir = &config.data;
    let corpus = match config.format {
        Format::Linqs => {
            let content = find_one(dir, |n| n.ends_with(".content"), "*.content")?;
            let cites = find_one(dir, |n| n.ends_with(".cites"), "*.cites")?;
            corpus::load_linqs(open(&content)?, open(&cites)?)?
        }
        Format::Jsonl => {
            let docs = find_one(dir, |n| n.ends_with(".jsonl"), "*.jsonl")?;
            let cites = find_one(dir, |n| n == "cites.txt", "cites.txt")?;
            corpus::load_jsonl(open(&docs)?, open(&cites)?)?
        }
    };
    let stopwords: HashSet<String> = match &config.stopwords {
        Some(path) => open(path)?
            .lines()
            .map(|l| l.map(|l| l.trim().to_string()).map_err(|e| Error::io(path, e)))
            .collect::<Result<HashSet<_>>>()?
            .into_iter()
            .filter(|w| !w.is_empty())
            .collect(),
        None => HashSet::new(),
    };
    if stopwords.is_empty() && config.common_frac >= 1.0 && config.rare_count == 0 {
        return Ok(corpus);
    }
    Ok(filter_vocabulary(&corpus, &stopwords, config.common_frac, config.rare_count)?)
}

/// The train/test split of fold `fold` (single split when `folds == 1`).
pub fn make_split(corpus: &Corpus, config: &RunConfig, fold: usize) -> Result<Split> {
    if config.folds == 1 {
        split_train_test(corpus, config.test_frac, config.seed)
    } else {
        kfold(corpus, config.folds, config.seed)?
            .into_iter()
            .nth(fold)
            .ok_or_else(|| Error::InvalidArgument(format!("fold {fold} out of range")))
    }
}

/// Identity of one chain, stored next to its checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub repeat: usize,
    pub fold: usize,
    pub chain_seed: u64,
    pub test_ids: Vec<String>,
}

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const STATS_FILE: &str = "stats.jsonl";
pub const RUN_FILE: &str = "run.json";

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn chain_seed(config: &RunConfig, repeat: usize) -> u64 {
    config.seed.wrapping_add(repeat as u64)
}

/// Train one chain on the training side of `split`, writing its files to `dir`.
pub fn train_one(config: &RunConfig, split: &Split, repeat: usize, fold: usize, dir: &Path) -> Result<(ScntmModel, ChainStats)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let seed = chain_seed(config, repeat);
    let record = RunRecord {
        config: config.clone(),
        repeat,
        fold,
        chain_seed: seed,
        test_ids: split.test.docs.iter().map(|d| d.id.clone()).collect(),
    };
    write_file(&dir.join(RUN_FILE), &serde_json::to_string_pretty(&record)?)?;
    let mut model = init_model(&split.train, &config.model_config(), seed)?;
    let stats_path = dir.join(STATS_FILE);
    let mut stream = BufWriter::new(File::create(&stats_path).map_err(|e| Error::io(&stats_path, e))?);
    let mut write_error = None;
    let stats = Sampler::new(config.sampler_config(seed)).run_with(&mut model, |s: &IterationStats| {
        if write_error.is_some() {
            return;
        }
        let line = serde_json::to_string(s).expect("stats serialize");
        if let Err(e) = writeln!(stream, "{line}") {
            write_error = Some(e);
        }
    })?;
    if let Some(e) = write_error {
        return Err(Error::io(&stats_path, e));
    }
    stream.flush().map_err(|e| Error::io(&stats_path, e))?;
    write_file(&dir.join(CHECKPOINT_FILE), &model.to_json()?)?;
    Ok((model, stats))
}

fn run_dir(out: &Path, repeat: usize, fold: usize) -> PathBuf {
    out.join(format!("repeat{repeat}_fold{fold}"))
}

pub fn cmd_train(config: &RunConfig) -> std::result::Result<Vec<PathBuf>, CliError> {
    config.validate()?;
    let corpus = load_corpus(config)?;
    let splits: Vec<Split> = (0..config.folds)
        .map(|f| make_split(&corpus, config, f))
        .collect::<Result<_>>()?;
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    write_file(&config.out.join("config.json"), &serde_json::to_string_pretty(config)?)?;
    let jobs: Vec<(usize, usize)> = (0..config.repeats)
        .flat_map(|r| (0..config.folds).map(move |f| (r, f)))
        .collect();
    let dirs = jobs
        .par_iter()
        .map(|&(r, f)| {
            let dir = run_dir(&config.out, r, f);
            let (_, stats) = train_one(config, &splits[f], r, f, &dir)?;
            log::info!(
                "repeat {r} fold {f}: final log-likelihood {:?}, mean acceptance {:?}",
                stats.iterations.last().map(|s| s.log_likelihood),
                stats.mean_acceptance()
            );
            Ok(dir)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dirs)
}

fn read_stats(path: &Path) -> Result<ChainStats> {
    let mut stats = ChainStats::default();
    if !path.exists() {
        return Ok(stats);
    }
    for line in open(path)?.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            stats.iterations.push(serde_json::from_str(&line)?);
        }
    }
    Ok(stats)
}

pub fn load_checkpoint(path: &Path) -> std::result::Result<ScntmModel, CliError> {
    require_path(path)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(ScntmModel::from_json(&text)?)
}

/// Reject a checkpoint whose settings or vocabulary differ from the run configuration.
pub fn check_compatible(model: &ScntmModel, config: &RunConfig, corpus: &Corpus) -> Result<()> {
    if model.config.max_topics != config.topics {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint has {} topics, configuration asks for {}",
            model.config.max_topics, config.topics
        )));
    }
    if model.config.eta != config.eta {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint has eta {}, configuration asks for {}",
            model.config.eta, config.eta
        )));
    }
    if model.corpus.vocab != corpus.vocab {
        return Err(Error::CheckpointMismatch("vocabulary differs from the dataset".into()));
    }
    Ok(())
}

/// Evaluate one run directory.
pub fn eval_run(dir: &Path, overrides: &RunArgs) -> std::result::Result<EvalReport, CliError> {
    let record_path = dir.join(RUN_FILE);
    require_path(&record_path)?;
    let record: RunRecord =
        serde_json::from_str(&fs::read_to_string(&record_path).map_err(|e| Error::io(&record_path, e))?)
            .map_err(Error::from)?;
    let mut config = record.config.clone();
    let base = resolve_config(None, overrides)?;
    macro_rules! keep_override {
        ($($field:ident <- $arg:ident),*) => {
            $(if overrides.$arg.is_some() { config.$field = base.$field.clone(); })*
        };
    }
    keep_override!(data <- data, format <- format, eta <- eta, topics <- topics, samples <- samples, seed <- seed);
    let model = load_checkpoint(&dir.join(CHECKPOINT_FILE))?;
    let corpus = load_corpus(&config)?;
    check_compatible(&model, &config, &corpus)?;
    let split = make_split(&corpus, &record.config, record.fold)?;
    let test_ids: Vec<&str> = split.test.docs.iter().map(|d| d.id.as_str()).collect();
    if test_ids != record.test_ids.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::CheckpointMismatch("dataset no longer reproduces the recorded split".into()).into());
    }
    let predictor = Predictor::new(&model);
    let eval_seed = config.seed ^ 0x5eed;
    let train_perplexity = eval::train_perplexity(&model, &predictor)?;
    let test_perplexity = eval::test_perplexity(&predictor, &split, false, config.samples, eval_seed)?;
    let has_labels = split.test.docs.iter().any(|d| d.category.is_some());
    let (purity, nmi) = if has_labels {
        let (p, n) = eval::cluster_scores(&predictor, &split, config.samples, eval_seed)?;
        (Some(p), Some(n))
    } else {
        (None, None)
    };
    let stats = read_stats(&dir.join(STATS_FILE))?;
    let mut echo = config_echo(&config);
    echo.insert("repeat".into(), record.repeat.to_string());
    echo.insert("fold".into(), record.fold.to_string());
    echo.insert("chain_seed".into(), record.chain_seed.to_string());
    let report = EvalReport {
        train_perplexity: Some(train_perplexity),
        test_perplexity: Some(test_perplexity),
        purity,
        nmi,
        mean_acceptance: stats.mean_acceptance(),
        final_log_likelihood: stats.iterations.last().map(|s| s.log_likelihood),
        config: echo,
    };
    write_file(&dir.join("report.txt"), &report.to_key_value())?;
    write_file(&dir.join("report.json"), &report.to_json()?)?;
    Ok(report)
}

fn config_echo(config: &RunConfig) -> BTreeMap<String, String> {
    match serde_json::to_value(config) {
        Ok(serde_json::Value::Object(map)) => map
            .into_iter()
            .map(|(k, v)| {
                let v = match v {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                (k, v)
            })
            .collect(),
        _ => BTreeMap::new(),
    }
}

/// Mean and sample standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub runs: Vec<String>,
    pub metrics: BTreeMap<String, Vec<f64>>,
    pub mean: BTreeMap<String, f64>,
    pub sd: BTreeMap<String, f64>,
}

pub fn summarize(named: &[(String, EvalReport)]) -> Summary {
    let mut metrics: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (_, r) in named {
        for (k, v) in [
            ("train_perplexity", r.train_perplexity),
            ("test_perplexity", r.test_perplexity),
            ("purity", r.purity),
            ("nmi", r.nmi),
            ("mean_acceptance", r.mean_acceptance),
        ] {
            if let Some(v) = v {
                metrics.entry(k.to_string()).or_default().push(v);
            }
        }
    }
    let (mut mean, mut sd) = (BTreeMap::new(), BTreeMap::new());
    for (k, vs) in &metrics {
        let (m, s) = mean_sd(vs);
        mean.insert(k.clone(), m);
        sd.insert(k.clone(), s);
    }
    Summary {
        runs: named.iter().map(|(n, _)| n.clone()).collect(),
        metrics,
        mean,
        sd,
    }
}

pub fn cmd_eval(args: &EvalArgs) -> std::result::Result<Summary, CliError> {
    require_path(&args.runs)?;
    let mut dirs: Vec<PathBuf> = if args.runs.join(RUN_FILE).exists() {
        vec![args.runs.clone()]
    } else {
        fs::read_dir(&args.runs)
            .map_err(|e| Error::io(&args.runs, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(RUN_FILE).exists())
            .collect()
    };
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Usage(format!("no runs found under {}", args.runs.display())));
    }
    let reports = dirs
        .par_iter()
        .map(|d| eval_run(d, &args.run).map(|r| (d.display().to_string(), r)))
        .collect::<std::result::Result<Vec<_>, CliError>>()?;
    let summary = summarize(&reports);
    let mut text = String::new();
    for (k, m) in &summary.mean {
        text.push_str(&format!("{k}={m} +- {}\n", summary.sd[k]));
    }
    write_file(&args.runs.join("summary.txt"), &text)?;
    write_file(&args.runs.join("summary.json"), &serde_json::to_string_pretty(&summary)?)?;
    print!("{text}");
    Ok(summary)
}

pub fn cmd_cluster(args: &ClusterArgs) -> std::result::Result<(f64, f64), CliError> {
    let model = load_checkpoint(&args.checkpoint)?;
    let thetas = model.theta_prime_means();
    let mut rows = String::new();
    let (mut classes, mut clusters) = (Vec::new(), Vec::new());
    for (doc, theta) in model.corpus.docs.iter().zip(&thetas) {
        let topic = eval::dominant_topic(theta);
        let category = doc.category.map(|c| model.corpus.categories[c].as_str()).unwrap_or("");
        rows.push_str(&format!("{}\t{topic}\t{category}\n", doc.id));
        if let Some(c) = doc.category {
            classes.push(c);
            clusters.push(topic);
        }
    }
    write_file(&args.out, &rows)?;
    let purity = eval::purity(&classes, &clusters)?;
    let nmi = eval::nmi(&classes, &clusters)?;
    println!("purity={purity}\nnmi={nmi}");
    Ok((purity, nmi))
}

pub fn cmd_export(args: &ExportArgs) -> std::result::Result<(), CliError> {
    let model = load_checkpoint(&args.checkpoint)?;
    let graph = export::emit_graph(&model, args.authors, args.threshold)?;
    write_file(&args.out, &graph)?;
    if let Some(path) = &args.words_out {
        let mut text = String::new();
        for k in 0..model.num_topics() {
            let words: Vec<String> = export::top_words(&model, k, args.top_words)?
                .into_iter()
                .map(|(w, _)| w)
                .collect();
            text.push_str(&format!("topic{k}\t{}\n", words.join(" ")));
        }
        write_file(path, &text)?;
    }
    Ok(())
}

pub fn cmd_recover(args: &RecoverArgs) -> std::result::Result<(), CliError> {
    require_path(&args.tfidf)?;
    let mut rows = Vec::new();
    for (i, line) in open(&args.tfidf)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&args.tfidf, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::parse(&args.tfidf.display().to_string(), i + 1, format!("bad number `{v}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let counts = corpus::recover_counts_from_tfidf(&rows)?;
    let text: String = counts
        .iter()
        .map(|row| {
            let cells: Vec<String> = row.iter().map(u32::to_string).collect();
            cells.join(" ") + "\n"
        })
        .collect();
    write_file(&args.out, &text)?;
    Ok(())
}

/// Dispatch a parsed command line.
pub fn run(cli: Cli) -> std::result::Result<(), CliError> {
    match &cli.command {
        Command::Train(args) => {
            let config = resolve_config(cli.config.as_deref(), args)?;
            cmd_train(&config).map(|_| ())
        }
        Command::Eval(args) => cmd_eval(args).map(|_| ()),
        Command::Cluster(args) => cmd_cluster(args).map(|_| ()),
        Command::Export(args) => cmd_export(args),
        Command::Recover(args) => cmd_recover(args),
    }
}
