//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::embedding::{read_embedding, write_embedding};
use crate::error::{Error, Result};
use crate::eval::{self, FitOptions};
use crate::graph::{load_graph, read_labels, save_graph, MultiViewGraph};
use crate::numkernel::{Activation, DenseMatrix, OptimizerKind};
use crate::par::Exec;
use crate::rng::{derive, derive_seed};
use crate::synth::{complementary_spec, generate, SbmSpec};
use crate::trainer::{self, load_checkpoint, Side, TrainConfig};
use crate::generator::SelectMode;

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "megan", version, about = "Adversarial multi-view network embedding")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Worker threads (falls back to MEGAN_THREADS; results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// `key=value` file merged under the explicit flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multi-view graph.
    Synth(SynthArgs),
    /// Pretrain and train on an edge file.
    Train(TrainArgs),
    /// Downstream evaluation.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Write an embedding from a checkpoint.
    Export(ExportArgs),
    /// 2-D PCA projection of an embedding.
    Project(ProjectArgs),
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum EvalCommand {
    /// Node classification.
    Nc(NcArgs),
    /// Link prediction with edge holdout and retraining.
    Lp(LpArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Correlated,
    Complementary,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = Preset::Correlated)]
    pub preset: Preset,
    #[arg(long, default_value_t = 300, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 3)]
    pub communities: usize,
    #[arg(long, default_value_t = 2)]
    pub views: usize,
    #[arg(long, default_value_t = 0.15)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.02)]
    pub p_out: f64,
    #[arg(long, default_value_t = 0.5)]
    pub correlation: f64,
    /// Preferential-attachment noise edges per view.
    #[arg(long, default_value_t = 0)]
    pub pa_noise: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix: writes `<out>.edges`, `<out>.labels`, `<out>.manifest.json`.
    #[arg(long, default_value = "graph")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerArg {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SideArg {
    Generator,
    Discriminator,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Side {
        match s {
            SideArg::Generator => Side::Generator,
            SideArg::Discriminator => Side::Discriminator,
        }
    }
}

/// Training flags shared by `train` and `eval lp`. Unset flags keep the
/// library defaults.
#[derive(Debug, Args, Serialize, Default)]
pub struct TrainFlags {
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub g_steps: Option<usize>,
    #[arg(long)]
    pub d_steps: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub pretrain_epochs: Option<usize>,
    #[arg(long)]
    pub lr_g: Option<f64>,
    #[arg(long)]
    pub lr_d: Option<f64>,
    #[arg(long)]
    pub mode: Option<SelectMode>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub fused: Option<usize>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerArg>,
    #[arg(long)]
    pub activation: Option<Activation>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub early_stop: bool,
    #[arg(long)]
    pub reward_baseline: bool,
    #[arg(long)]
    pub d_step_per_edge: bool,
}

impl TrainFlags {
    pub fn to_config(&self, seed: u64) -> Result<TrainConfig> {
        let mut c = TrainConfig { seed, ..TrainConfig::default() };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(d, t, s, g_steps, d_steps, epochs, pretrain_epochs, lr_g, lr_d, mode, batch_size, activation, eval_every);
        c.hidden = self.hidden.or(c.hidden);
        c.fused = self.fused.or(c.fused);
        match self.optimizer {
            Some(OptimizerArg::Sgd) => c.optimizer = OptimizerKind::Sgd { momentum: 0.9 },
            Some(OptimizerArg::Adam) => c.optimizer = OptimizerKind::adam(),
            None => {}
        }
        c.early_stop |= self.early_stop;
        c.reward_baseline |= self.reward_baseline;
        c.d_step_per_edge |= self.d_step_per_edge;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Which table to write as the embedding.
    #[arg(long, value_enum, default_value_t = SideArg::Generator)]
    pub side: SideArg,
    /// Output prefix: `<out>.emb`, `<out>.ckpt`, `<out>.loss.csv`, `<out>.manifest.json`.
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct NcArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// A fraction, a comma list, or a `lo..hi` sweep in steps of 0.1.
    #[arg(long, default_value = "0.5")]
    pub train_frac: String,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value = "metrics.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct LpArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub view: usize,
    #[arg(long, default_value_t = 0.5)]
    pub holdout: f64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub runs: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Score this fixed embedding instead of retraining per split.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SideArg::Generator)]
    pub side: SideArg,
    #[arg(long, default_value = "metrics.csv")]
    pub out: PathBuf,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct ExportArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = SideArg::Generator)]
    pub side: SideArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectArgs {
    #[arg(long)]
    pub embedding: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value = "projection.csv")]
    pub out: PathBuf,
}

/// Failure split by exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    /// Input path → SHA-256 hex digest.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

struct ManifestBuilder {
    command: String,
    args: Vec<String>,
    started: f64,
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
}

impl ManifestBuilder {
    fn new(command: &str, args: &[String]) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            args: args.to_vec(),
            started: now(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    fn input(&mut self, p: &Path) -> Result<()> {
        self.inputs.insert(p.display().to_string(), sha256_hex(p)?);
        Ok(())
    }

    fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    fn write<C: Serialize>(self, path: &Path, config: &C, seed: u64) -> Result<()> {
        let m = RunManifest {
            tool: "megan",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            args: self.args,
            config: serde_json::to_value(config).map_err(|e| Error::Argument(e.to_string()))?,
            seed,
            inputs: self.inputs,
            outputs: self.outputs,
            started_unix: self.started,
            finished_unix: now(),
        };
        let text = serde_json::to_string_pretty(&m).map_err(|e| Error::Argument(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Manifest path for a single output file: `<file>.manifest.json`.
fn manifest_for(out: &Path) -> PathBuf {
    with_suffix(out, ".manifest.json")
}

/// Parse a `key=value` config file into long flags.
pub fn config_args(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: no + 1,
            msg: format!("expected key=value, got {line:?}"),
        })?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        let value = v.trim();
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                out.push(format!("--{key}"));
                out.push(value.to_string());
            }
        }
    }
    Ok(out)
}

/// Splice config-file flags right after the subcommand path so that any
/// explicit flag, which comes later, overrides them.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>> {
    let mut cfg_path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            cfg_path = it.next();
        } else if let Some(p) = a.strip_prefix("--config=") {
            cfg_path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(p) = cfg_path else { return Ok(rest) };
    let extra = config_args(Path::new(&p))?;
    // binary name, subcommand, and for `eval` its nested subcommand
    let mut at = 1;
    let mut depth = 0;
    while at < rest.len() && depth < 2 {
        let tok = &rest[at];
        if tok.starts_with('-') {
            // a global flag before the subcommand; skip its value too
            at += if tok.contains('=') || tok == "--help" || tok == "-h" { 1 } else { 2 };
            continue;
        }
        depth += if tok == "eval" { 1 } else { 2 };
        at += 1;
    }
    let at = at.min(rest.len());
    rest.splice(at..at, extra);
    Ok(rest)
}

fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var("MEGAN_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("MEGAN_THREADS must be a positive integer, got {v:?}"))),
        _ => Ok(None),
    }
}

/// Parse and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(cli, &argv) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}

pub fn run(cli: Cli, argv: &[String]) -> CliResult<()> {
    let threads = thread_count(cli.threads)?;
    if threads == Some(0) {
        return Err(Failure::Usage("--threads must be at least 1".into()));
    }
    let argv = argv.to_vec();
    let go = move || dispatch(cli.command, &argv);
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Runtime(Error::Argument(e.to_string())))?;
        return pool.install(go);
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    go()
}

fn dispatch(cmd: Command, argv: &[String]) -> CliResult<()> {
    match cmd {
        Command::Synth(a) => cmd_synth(&a, argv),
        Command::Train(a) => cmd_train(&a, argv),
        Command::Eval(EvalCommand::Nc(a)) => cmd_eval_nc(&a, argv),
        Command::Eval(EvalCommand::Lp(a)) => cmd_eval_lp(&a, argv),
        Command::Export(a) => cmd_export(&a, argv),
        Command::Project(a) => cmd_project(&a, argv),
    }
}

fn usage_on_argument(e: Error) -> Failure {
    match e {
        Error::Argument(m) => Failure::Usage(m),
        other => Failure::Runtime(other),
    }
}

pub fn cmd_synth(a: &SynthArgs, argv: &[String]) -> CliResult<()> {
    let n = a.n as usize;
    let spec = match a.preset {
        Preset::Correlated => {
            let mut s = SbmSpec::uniform(n, a.communities, a.views, a.p_in, a.p_out, a.correlation, a.seed);
            s.pa_noise_edges = a.pa_noise;
            s
        }
        Preset::Complementary => {
            let mut s = complementary_spec(n, a.seed).map_err(usage_on_argument)?;
            s.pa_noise_edges = a.pa_noise;
            s
        }
    };
    spec.validate().map_err(usage_on_argument)?;
    let g = generate(&spec)?;
    let edges = with_suffix(&a.out, ".edges");
    let labels = with_suffix(&a.out, ".labels");
    save_graph(&g, &edges, Some(&labels))?;
    let mut m = ManifestBuilder::new("synth", argv);
    m.output(&edges);
    m.output(&labels);
    m.write(&with_suffix(&a.out, ".manifest.json"), &spec, a.seed)?;
    log::info!("wrote {} nodes, {} edges to {}", g.n(), g.total_edges(), edges.display());
    Ok(())
}

fn load_inputs(edges: &Path, labels: Option<&Path>, m: &mut ManifestBuilder) -> Result<MultiViewGraph> {
    let g = load_graph(edges, labels)?;
    m.input(edges)?;
    if let Some(l) = labels {
        m.input(l)?;
    }
    Ok(g)
}

pub fn cmd_train(a: &TrainArgs, argv: &[String]) -> CliResult<()> {
    let cfg = a.train.to_config(a.seed).map_err(usage_on_argument)?;
    let mut m = ManifestBuilder::new("train", argv);
    let g = load_inputs(&a.edges, a.labels.as_deref(), &mut m)?;
    let state = trainer::train(&g, &cfg)?;
    let emb = with_suffix(&a.out, ".emb");
    let ckpt = with_suffix(&a.out, ".ckpt");
    let loss = with_suffix(&a.out, ".loss.csv");
    state.export_embedding(a.side.into(), &emb)?;
    state.save_checkpoint(&ckpt)?;
    state.write_history(&loss)?;
    for p in [&emb, &ckpt, &loss] {
        m.output(p);
    }
    m.write(&with_suffix(&a.out, ".manifest.json"), &cfg, a.seed)?;
    Ok(())
}

/// `0.5`, `0.1,0.3`, or `0.1..0.9` (inclusive, step 0.1).
pub fn parse_fractions(s: &str) -> std::result::Result<Vec<f64>, String> {
    let bad = || format!("invalid train fraction spec {s:?}");
    let fracs: Vec<f64> = if let Some((lo, hi)) = s.split_once("..") {
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let (a, b) = ((lo * 10.0).round() as i64, (hi * 10.0).round() as i64);
        if b < a {
            return Err(bad());
        }
        (a..=b).map(|k| k as f64 / 10.0).collect()
    } else {
        s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<std::result::Result<_, _>>()?
    };
    if fracs.is_empty() || fracs.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
        return Err(format!("train fractions must lie in (0, 1): {s:?}"));
    }
    Ok(fracs)
}

fn run_seeds(master: u64, tag: &str, runs: u64) -> Vec<u64> {
    (0..runs).map(|r| derive_seed(master, tag, r)).collect()
}

pub fn cmd_eval_nc(a: &NcArgs, argv: &[String]) -> CliResult<()> {
    let fracs = parse_fractions(&a.train_frac).map_err(Failure::Usage)?;
    if !(a.lambda.is_finite() && a.lambda >= 0.0) {
        return Err(Failure::Usage(format!("--lambda must be non-negative, got {}", a.lambda)));
    }
    let mut m = ManifestBuilder::new("eval nc", argv);
    let x = read_embedding(&a.embedding)?;
    m.input(&a.embedding)?;
    let labels = read_labels(&a.labels, x.rows(), None).map_err(|e| match e.root() {
        Error::NodeOutOfBounds { node, n } => Failure::Runtime(Error::Shape(format!(
            "label file names node {node} but the embedding has {n} rows"
        ))),
        _ => Failure::Runtime(e),
    })?;
    m.input(&a.labels)?;
    let opts = FitOptions { lambda: a.lambda, ..FitOptions::default() };
    let seeds = run_seeds(a.seed, "nc-run", a.runs);
    let mut rows = Vec::new();
    for &f in &fracs {
        let r = eval::node_classification(&x, &labels, f, &seeds, &opts, Exec::default())?;
        log::info!("train-frac {f}: micro {:.4} macro {:.4}", r.micro_f1.0, r.macro_f1.0);
        rows.extend(eval::nc_rows(&r));
    }
    eval::write_metrics(&a.out, &rows)?;
    m.output(&a.out);
    m.write(&manifest_for(&a.out), a, a.seed)?;
    Ok(())
}

pub fn cmd_eval_lp(a: &LpArgs, argv: &[String]) -> CliResult<()> {
    if !(a.holdout > 0.0 && a.holdout < 1.0) {
        return Err(Failure::Usage(format!("--holdout must lie in (0, 1), got {}", a.holdout)));
    }
    let base = a.train.to_config(a.seed).map_err(usage_on_argument)?;
    let mut m = ManifestBuilder::new("eval lp", argv);
    let g = load_inputs(&a.edges, None, &mut m)?;
    if a.view >= g.k() {
        return Err(Failure::Usage(format!("--view {} but the graph has {} views", a.view, g.k())));
    }
    let fixed = match &a.embedding {
        Some(p) => {
            m.input(p)?;
            Some(read_embedding(p)?)
        }
        None => None,
    };
    let opts = FitOptions { lambda: a.lambda, ..FitOptions::default() };
    let mut runs = Vec::new();
    for r in 0..a.runs {
        let split = eval::link_split(&g, a.view, a.holdout, &mut derive(a.seed, "lp-split", r))?;
        let trained: DenseMatrix;
        let x = match &fixed {
            Some(x) => x,
            None => {
                let reduced = split.reduced_graph(&g)?;
                let cfg = TrainConfig { seed: derive_seed(a.seed, "lp-train", r), ..base.clone() };
                let state = trainer::train(&reduced, &cfg).map_err(|e| e.context(format!("lp run {r}")))?;
                trained = state.embedding(a.side.into()).clone();
                &trained
            }
        };
        let run = eval::link_prediction_run(x, &g, &split, derive_seed(a.seed, "lp-score", r), &opts)?;
        log::info!("lp run {r}: auc {:.4} ap {:.4}", run.auc, run.ap);
        runs.push(eval::LpRun { seed: r, ..run });
    }
    let report = eval::link::summarize(a.view, runs);
    eval::write_metrics(&a.out, &eval::lp_rows(&report))?;
    m.output(&a.out);
    #[derive(Serialize)]
    struct LpManifestConfig<'a> {
        eval: &'a LpArgs,
        train: &'a TrainConfig,
    }
    m.write(&manifest_for(&a.out), &LpManifestConfig { eval: a, train: &base }, a.seed)?;
    Ok(())
}

pub fn cmd_export(a: &ExportArgs, argv: &[String]) -> CliResult<()> {
    let mut m = ManifestBuilder::new("export", argv);
    let (gen, disc) = load_checkpoint(&a.checkpoint)?;
    m.input(&a.checkpoint)?;
    let x = match Side::from(a.side) {
        Side::Generator => &gen.x,
        Side::Discriminator => &disc.table,
    };
    write_embedding(x, &a.out)?;
    m.output(&a.out);
    m.write(&manifest_for(&a.out), a, 0)?;
    Ok(())
}

pub fn cmd_project(a: &ProjectArgs, argv: &[String]) -> CliResult<()> {
    let mut m = ManifestBuilder::new("project", argv);
    let x = read_embedding(&a.embedding)?;
    m.input(&a.embedding)?;
    let labels = match &a.labels {
        Some(p) => {
            m.input(p)?;
            Some(read_labels(p, x.rows(), None)?)
        }
        None => None,
    };
    let p = eval::project_2d(&x)?;
    eval::write_projection(&a.out, &p.coords, labels.as_deref())?;
    m.output(&a.out);
    m.write(&manifest_for(&a.out), a, 0)?;
    Ok(())
}
