//! Command-line front end.
//!
//! Every command prints a JSON summary on stdout and human-readable progress
//! on stderr. Commands that write files also write the summary next to their
//! main output. Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde_json::{json, Value};

use crate::corpus::{
    read_judged, read_plain, read_raw, read_tagged, write_judged, write_plain, write_tagged,
    NormalizationOptions, Sentence, TaggedSentence,
};
use crate::error::{Error, Result};
use crate::eval::{percent, score, score_by_category};
use crate::hashing::derive_seed;
use crate::judge::train_judge;
use crate::linear::{training_split, TrainConfig, DEFAULT_HASH_BITS};
use crate::perturb::{gen_disfluency_corpus, gen_judge_corpus, strip_d, NgramSampler};
use crate::selftrain::{run_pipeline, train_teacher, LoopConfig};
use crate::synth::{generate, Style};
use crate::tagger::{train, LinearTagger, SequenceTagger};

pub const OUTPUT_DIR_ENV: &str = "DISFL_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "disfl",
    version,
    about = "Unsupervised disfluency detection toolkit"
)]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// TOML file supplying default values for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Global seed; every stage derives its own seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate pseudo-labeled corpora from fluent text.
    #[command(subcommand)]
    GenPseudo(GenPseudo),
    /// Train a teacher tagger or a grammaticality judge.
    #[command(subcommand)]
    Train(TrainCmd),
    /// Run the full self-training loop.
    Selftrain(SelftrainArgs),
    /// Score predicted labels against gold labels.
    Evaluate(EvaluateArgs),
    /// Tag a plain-text file with a trained model.
    Infer(InferArgs),
    /// Write synthetic text for experiments.
    Synth(SynthArgs),
}

#[derive(Debug, Subcommand)]
pub enum GenPseudo {
    /// Repetition/insertion corpus with D/O labels.
    Disfluency(GenArgs),
    /// Right/error corpus for the judge.
    Judge(GenJudgeArgs),
}

#[derive(Debug, Subcommand)]
pub enum TrainCmd {
    /// Tagger on a labeled (pseudo) corpus.
    Teacher(TrainTeacherArgs),
    /// Judge on a right/error corpus.
    Judge(TrainJudgeArgs),
}

#[derive(Debug, Args)]
pub struct NormArgs {
    /// Normalize plain-text inputs (lowercase, punctuation, partial words,
    /// fillers, discourse markers) before use.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, requires = "normalize")]
    pub keep_case: bool,
    #[arg(long, requires = "normalize")]
    pub keep_punctuation: bool,
    #[arg(long, requires = "normalize")]
    pub keep_partial_words: bool,
    #[arg(long, requires = "normalize")]
    pub keep_fillers: bool,
    #[arg(long, requires = "normalize")]
    pub no_merge_markers: bool,
}

impl NormArgs {
    fn options(&self) -> Option<NormalizationOptions> {
        self.normalize.then_some(NormalizationOptions {
            lowercase: !self.keep_case,
            strip_punctuation: !self.keep_punctuation,
            strip_partial_words: !self.keep_partial_words,
            strip_fillers: !self.keep_fillers,
            merge_discourse_markers: !self.no_merge_markers,
        })
    }

    fn read(&self, path: &Path) -> Result<Vec<Sentence>> {
        match self.options() {
            Some(opts) => read_raw(path, &opts).map(|(kept, _)| kept),
            None => read_plain(path),
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Fluent plain-text corpus, one sentence per line.
    #[arg(long)]
    pub fluent: PathBuf,
    /// Text to draw inserted n-grams from (default: the fluent corpus).
    #[arg(long)]
    pub ngram_source: Option<PathBuf>,
    /// Sentences to emit (default: one per fluent sentence).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct GenJudgeArgs {
    #[command(flatten)]
    pub gen: GenArgs,
    #[arg(long, default_value_t = 0.5)]
    pub error_fraction: f64,
}

#[derive(Debug, Args, Clone)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 5)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1)]
    pub batch_size: usize,
    /// Epochs without held-out improvement before stopping (0 = never).
    #[arg(long, default_value_t = 2)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.1)]
    pub dev_fraction: f64,
    /// log2 of the hashed feature space.
    #[arg(long, default_value_t = DEFAULT_HASH_BITS)]
    pub hash_bits: u8,
}

impl TrainArgs {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            seed,
            patience: self.patience,
            dev_fraction: self.dev_fraction,
            hash_bits: self.hash_bits,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainTeacherArgs {
    /// Tagged corpus (token<TAB>label lines, blank line between sentences).
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Start from this model instead of zero weights.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct TrainJudgeArgs {
    /// Judged corpus (label<TAB>sentence lines).
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct SelftrainArgs {
    /// Fluent plain-text corpus for pseudo data.
    #[arg(long)]
    pub fluent: PathBuf,
    /// Unlabeled plain-text pool.
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Tagged pool; labels are used only for selection diagnostics.
    #[arg(long, conflicts_with = "pool")]
    pub pool_gold: Option<PathBuf>,
    /// Tagged dev set for model selection.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long, env = OUTPUT_DIR_ENV)]
    pub out_dir: PathBuf,
    /// Ablation: keep every pseudo-labeled sentence.
    #[arg(long)]
    pub no_select: bool,
    /// Comma-separated pool sample sizes per iteration.
    #[arg(long, value_delimiter = ',')]
    pub pool_schedule: Option<Vec<usize>>,
    /// Teacher pseudo-corpus size. Several comma-separated values run a
    /// teacher-only sweep instead of the loop.
    #[arg(long, value_delimiter = ',')]
    pub pseudo_size: Option<Vec<usize>>,
    #[arg(long)]
    pub judge_size: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub error_fraction: f64,
    #[arg(long, default_value_t = 8)]
    pub iterations: usize,
    #[arg(long, default_value_t = 2)]
    pub stop_patience: usize,
    #[command(flatten)]
    pub train: TrainArgs,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// Add repetition / non-repetition sub-reports.
    #[arg(long)]
    pub by_category: bool,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Plain-text input, one sentence per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Read the input as a tagged corpus and ignore its labels.
    #[arg(long, conflicts_with = "normalize")]
    pub tagged: bool,
    /// Tagged output.
    #[arg(long)]
    pub out: PathBuf,
    /// Plain-text output with D tokens removed.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    #[command(flatten)]
    pub norm: NormArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "news")]
    pub style: Style,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match parse(args) {
        Ok(cli) => cli,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return 2;
        }
        Err(Failure::Clap(e)) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };

    if let Err(msg) = check_inputs(&cli.command) {
        eprintln!("error: {msg}");
        return 2;
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        builder = builder.num_threads(n);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    match pool.install(|| execute(&cli)) {
        Ok(summary) => {
            println!(
                "{}",
                serde_json::to_string(&summary).expect("summary serializes")
            );
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

enum Failure {
    Usage(String),
    Clap(clap::Error),
}

fn parse(args: Vec<OsString>) -> std::result::Result<Cli, Failure> {
    let matches = Cli::command()
        .try_get_matches_from(&args)
        .map_err(Failure::Clap)?;
    let Some(config) = matches.get_one::<PathBuf>("config").cloned() else {
        return Cli::from_arg_matches(&matches).map_err(Failure::Clap);
    };
    let extra = config_args(&config, &matches).map_err(Failure::Usage)?;
    let mut args = args;
    args.extend(extra);
    let matches = Cli::command()
        .try_get_matches_from(&args)
        .map_err(Failure::Clap)?;
    Cli::from_arg_matches(&matches).map_err(Failure::Clap)
}

/// Turns the config file's keys into extra flags for the leaf subcommand.
/// Keys the command does not accept are ignored; flags given on the command
/// line win.
fn config_args(path: &Path, matches: &ArgMatches) -> std::result::Result<Vec<OsString>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| format!("{}: {e}", path.display()))?;

    let mut cmd = Cli::command();
    cmd.build();
    let mut leaf = &cmd;
    let mut leaf_matches = matches;
    while let Some((name, sub)) = leaf_matches.subcommand() {
        leaf = leaf
            .find_subcommand(name)
            .expect("parsed subcommand exists");
        leaf_matches = sub;
    }

    let mut out = Vec::new();
    for (key, value) in &table {
        let id = key.replace('-', "_");
        let Some(arg) = leaf.get_arguments().find(|a| a.get_id().as_str() == id) else {
            log::debug!("config key {key} not used by this command");
            continue;
        };
        if id == "config" {
            continue;
        }
        if leaf_matches.value_source(&id) == Some(ValueSource::CommandLine) {
            continue;
        }
        let flag = format!("--{}", arg.get_long().unwrap_or(key));
        match value {
            toml::Value::Boolean(true) => out.push(flag.into()),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                let joined: Vec<String> = items
                    .iter()
                    .map(scalar)
                    .collect::<std::result::Result<_, _>>()?;
                out.push(flag.into());
                out.push(joined.join(",").into());
            }
            other => {
                out.push(flag.into());
                out.push(scalar(other)?.into());
            }
        }
    }
    Ok(out)
}

fn scalar(v: &toml::Value) -> std::result::Result<String, String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(format!("unsupported config value {other}")),
    }
}

/// Input paths that must exist before anything runs.
fn check_inputs(cmd: &Command) -> std::result::Result<(), String> {
    let mut paths: Vec<&Path> = Vec::new();
    match cmd {
        Command::GenPseudo(GenPseudo::Disfluency(g))
        | Command::GenPseudo(GenPseudo::Judge(GenJudgeArgs { gen: g, .. })) => {
            paths.push(&g.fluent);
            paths.extend(g.ngram_source.as_deref());
        }
        Command::Train(TrainCmd::Teacher(a)) => {
            paths.push(&a.corpus);
            paths.extend(a.init.as_deref());
        }
        Command::Train(TrainCmd::Judge(a)) => paths.push(&a.corpus),
        Command::Selftrain(a) => {
            paths.push(&a.fluent);
            paths.extend(a.pool.as_deref());
            paths.extend(a.pool_gold.as_deref());
            paths.extend(a.dev.as_deref());
            if a.pool.is_none() && a.pool_gold.is_none() {
                return Err("one of --pool or --pool-gold is required".into());
            }
        }
        Command::Evaluate(a) => paths.extend([a.gold.as_path(), a.pred.as_path()]),
        Command::Infer(a) => paths.extend([a.model.as_path(), a.input.as_path()]),
        Command::Synth(_) => {}
    }
    match paths.into_iter().find(|p| !p.exists()) {
        Some(p) => Err(format!("{}: no such file", p.display())),
        None => Ok(()),
    }
}

fn execute(cli: &Cli) -> Result<Value> {
    match &cli.command {
        Command::GenPseudo(GenPseudo::Disfluency(a)) => gen_disfluency(a, cli.seed),
        Command::GenPseudo(GenPseudo::Judge(a)) => gen_judge(a, cli.seed),
        Command::Train(TrainCmd::Teacher(a)) => train_teacher_cmd(a, cli.seed),
        Command::Train(TrainCmd::Judge(a)) => train_judge_cmd(a, cli.seed),
        Command::Selftrain(a) => selftrain(a, cli.seed),
        Command::Evaluate(a) => evaluate(a),
        Command::Infer(a) => infer(a),
        Command::Synth(a) => synth(a, cli.seed),
    }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(OsString::from).unwrap_or_default();
    name.push(".summary.json");
    out.with_file_name(name)
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(v)? + "\n";
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn load_gen_inputs(a: &GenArgs) -> Result<(Vec<Sentence>, NgramSampler)> {
    let fluent = a.norm.read(&a.fluent)?;
    let sampler = match &a.ngram_source {
        Some(p) => NgramSampler::new(&a.norm.read(p)?)?,
        None => NgramSampler::new(&fluent)?,
    };
    Ok((fluent, sampler))
}

fn gen_disfluency(a: &GenArgs, seed: u64) -> Result<Value> {
    let (fluent, sampler) = load_gen_inputs(a)?;
    let count = a.count.unwrap_or(fluent.len());
    let (corpus, s) =
        gen_disfluency_corpus(&fluent, &sampler, count, derive_seed(seed, "pseudo-corpus"))?;
    ensure_parent(&a.out)?;
    write_tagged(&a.out, &corpus)?;
    let summary = json!({
        "command": "gen-pseudo disfluency",
        "output": a.out,
        "seed": seed,
        "requested": s.requested,
        "sentences": s.emitted,
        "tokens": s.tokens,
        "disfluent_tokens": s.disfluent_tokens,
        "d_token_rate": round4(s.disfluent_rate()),
        "repetition_ops": s.repetition_ops,
        "inserting_ops": s.inserting_ops,
    });
    eprintln!(
        "wrote {} sentences to {} ({:.1}% D tokens)",
        s.emitted,
        a.out.display(),
        100.0 * s.disfluent_rate()
    );
    write_json(&sidecar(&a.out), &summary)?;
    Ok(summary)
}

fn gen_judge(a: &GenJudgeArgs, seed: u64) -> Result<Value> {
    let (fluent, sampler) = load_gen_inputs(&a.gen)?;
    let count = a.gen.count.unwrap_or(fluent.len());
    let (corpus, s) = gen_judge_corpus(
        &fluent,
        &sampler,
        count,
        a.error_fraction,
        derive_seed(seed, "judge-corpus"),
    )?;
    ensure_parent(&a.gen.out)?;
    write_judged(&a.gen.out, &corpus)?;
    let summary = json!({
        "command": "gen-pseudo judge",
        "output": a.gen.out,
        "seed": seed,
        "requested": s.requested,
        "sentences": s.emitted,
        "errors": s.errors,
        "error_rate": round4(s.error_rate()),
        "repetition_ops": s.repetition_ops,
        "inserting_ops": s.inserting_ops,
        "delete_ops": s.delete_ops,
    });
    eprintln!(
        "wrote {} sentences to {} ({:.1}% error)",
        s.emitted,
        a.gen.out.display(),
        100.0 * s.error_rate()
    );
    write_json(&sidecar(&a.gen.out), &summary)?;
    Ok(summary)
}

fn held_out_report(model: &LinearTagger, held_out: &[TaggedSentence]) -> Result<Value> {
    if held_out.is_empty() {
        return Ok(Value::Null);
    }
    let sentences: Vec<Sentence> = held_out.iter().map(|t| t.sentence().clone()).collect();
    let r = score(held_out, &model.predict_all(&sentences)?)?;
    Ok(serde_json::to_value(r.rendered())?)
}

fn train_teacher_cmd(a: &TrainTeacherArgs, seed: u64) -> Result<Value> {
    let corpus = read_tagged(&a.corpus)?;
    let config = a.train.config(derive_seed(seed, "teacher"));
    let init = a.init.as_ref().map(LinearTagger::load).transpose()?;
    let model = train(&corpus, &config, init.as_ref())?;
    ensure_parent(&a.out)?;
    model.save(&a.out)?;
    let (_, held_out) = training_split(&corpus, &config);
    let report = held_out_report(&model, &held_out)?;
    let summary = json!({
        "command": "train teacher",
        "model": a.out,
        "seed": seed,
        "sentences": corpus.len(),
        "fingerprint": model.fingerprint(),
        "fit": model.metadata().fit,
        "held_out": report,
    });
    eprintln!(
        "trained tagger on {} sentences; held-out F1 {}",
        corpus.len(),
        summary["held_out"]["f1"]
    );
    write_json(&sidecar(&a.out), &summary)?;
    Ok(summary)
}

fn train_judge_cmd(a: &TrainJudgeArgs, seed: u64) -> Result<Value> {
    let corpus = read_judged(&a.corpus)?;
    let config = a.train.config(derive_seed(seed, "judge"));
    let model = train_judge(&corpus, &config)?;
    ensure_parent(&a.out)?;
    model.save(&a.out)?;
    let summary = json!({
        "command": "train judge",
        "model": a.out,
        "seed": seed,
        "sentences": corpus.len(),
        "fingerprint": model.fingerprint(),
        "fit": model.metadata().fit,
        "held_out_accuracy": model.held_out_accuracy().map(percent),
    });
    eprintln!(
        "trained judge on {} sentences; held-out accuracy {}",
        corpus.len(),
        summary["held_out_accuracy"]
    );
    write_json(&sidecar(&a.out), &summary)?;
    Ok(summary)
}

fn selftrain(a: &SelftrainArgs, seed: u64) -> Result<Value> {
    let fluent = a.norm.read(&a.fluent)?;
    let (pool, pool_gold) = match (&a.pool, &a.pool_gold) {
        (Some(p), _) => (a.norm.read(p)?, None),
        (None, Some(p)) => {
            let gold = read_tagged(p)?;
            (
                gold.iter().map(|t| t.sentence().clone()).collect(),
                Some(gold),
            )
        }
        (None, None) => unreachable!("checked before running"),
    };
    let dev = a.dev.as_ref().map(read_tagged).transpose()?;
    let train = a.train.config(0);
    let mut config = LoopConfig {
        iterations_max: a.iterations,
        pool_schedule: a.pool_schedule.clone(),
        selection_enabled: !a.no_select,
        seed,
        stop_patience: a.stop_patience,
        pseudo_size: None,
        judge_size: a.judge_size,
        error_fraction: a.error_fraction,
        teacher: train.clone(),
        student: train.clone(),
        judge: train,
    };
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;

    let sizes = a.pseudo_size.clone().unwrap_or_default();
    if sizes.len() > 1 {
        return sweep(&fluent, dev.as_deref(), &sizes, &config, &a.out_dir);
    }
    config.pseudo_size = sizes.first().copied();
    let out = run_pipeline(
        &fluent,
        &pool,
        pool_gold.as_deref(),
        dev.as_deref(),
        &config,
        Some(&a.out_dir),
    )?;
    let st = &out.self_training.state;
    for r in &st.records {
        eprintln!(
            "iter {:>2}  L {:>6}  J {:>6}  F1 {}",
            r.t,
            r.pool_sampled,
            r.selected,
            r.f1.map_or("-".into(), |f| format!("{:.1}", percent(f)))
        );
    }
    eprintln!("best: iteration {}", st.best_iteration);
    let summary = json!({
        "command": "selftrain",
        "out_dir": a.out_dir,
        "seed": seed,
        "selection_enabled": config.selection_enabled,
        "best_iteration": st.best_iteration,
        "best_checkpoint": format!("iter-{:03}/model.bin", st.best_iteration),
        "best_f1": st.best_f1.map(percent),
        "teacher_f1": st.teacher_f1().map(percent),
        "model_selection": st.selection,
        "iterations_run": st.records.len() - 1,
        "judge_held_out_accuracy": out.judge.held_out_accuracy().map(percent),
    });
    write_json(&a.out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Teacher-only runs over several pseudo-corpus sizes, one record each.
fn sweep(
    fluent: &[Sentence],
    dev: Option<&[TaggedSentence]>,
    sizes: &[usize],
    config: &LoopConfig,
    out_dir: &Path,
) -> Result<Value> {
    let dev = dev.ok_or_else(|| Error::Config("a pseudo-size sweep needs --dev".into()))?;
    let sampler = NgramSampler::new(fluent)?;
    let mut records = Vec::new();
    let mut lines = String::new();
    for &size in sizes {
        let (teacher, s) = train_teacher(fluent, &sampler, size, config)?;
        let sentences: Vec<Sentence> = dev.iter().map(|t| t.sentence().clone()).collect();
        let r = score(dev, &teacher.predict_all(&sentences)?)?.rendered();
        eprintln!("pseudo size {:>8}  F1 {:.1}", s.emitted, r.f1());
        let rec = json!({
            "pseudo_size": s.emitted,
            "P": r.precision(),
            "R": r.recall(),
            "F1": r.f1(),
            "fingerprint": teacher.fingerprint(),
        });
        lines.push_str(&serde_json::to_string(&rec)?);
        lines.push('\n');
        records.push(rec);
    }
    let path = out_dir.join("sweep.jsonl");
    fs::write(&path, lines).map_err(|e| Error::io(&path, e))?;
    let summary = json!({
        "command": "selftrain sweep",
        "out_dir": out_dir,
        "seed": config.seed,
        "records": records,
    });
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn evaluate(a: &EvaluateArgs) -> Result<Value> {
    let gold = read_tagged(&a.gold)?;
    let pred = read_tagged(&a.pred)?;
    let report = if a.by_category {
        score_by_category(&gold, &pred)?
    } else {
        score(&gold, &pred)?
    };
    eprint!("{report}");
    let value = serde_json::to_value(report.rendered())?;
    if let Some(path) = &a.report {
        write_json(path, &value)?;
    }
    Ok(value)
}

fn infer(a: &InferArgs) -> Result<Value> {
    let model = LinearTagger::load(&a.model)?;
    let input = if a.tagged {
        read_tagged(&a.input)?
            .iter()
            .map(|t| t.sentence().clone())
            .collect()
    } else {
        a.norm.read(&a.input)?
    };
    let tagged = model.predict_all(&input)?;
    ensure_parent(&a.out)?;
    write_tagged(&a.out, &tagged)?;
    if let Some(clean) = &a.clean {
        ensure_parent(clean)?;
        let stripped: Vec<Sentence> = tagged.iter().map(strip_d).collect();
        write_plain(clean, &stripped)?;
    }
    let tokens: usize = tagged.iter().map(TaggedSentence::len).sum();
    let d: usize = tagged.iter().map(TaggedSentence::disfluent_count).sum();
    let summary = json!({
        "command": "infer",
        "model": a.model,
        "fingerprint": model.fingerprint(),
        "output": a.out,
        "clean": a.clean,
        "sentences": tagged.len(),
        "tokens": tokens,
        "disfluent_tokens": d,
    });
    eprintln!(
        "tagged {} sentences, {d} of {tokens} tokens D",
        tagged.len()
    );
    write_json(&sidecar(&a.out), &summary)?;
    Ok(summary)
}

fn synth(a: &SynthArgs, seed: u64) -> Result<Value> {
    let text = generate(
        a.style,
        a.count,
        derive_seed(seed, &format!("synth-{}", a.style)),
    );
    ensure_parent(&a.out)?;
    write_plain(&a.out, &text)?;
    let summary = json!({
        "command": "synth",
        "style": a.style,
        "output": a.out,
        "seed": seed,
        "sentences": text.len(),
        "tokens": text.iter().map(Sentence::len).sum::<usize>(),
    });
    eprintln!(
        "wrote {} {} sentences to {}",
        text.len(),
        a.style,
        a.out.display()
    );
    write_json(&sidecar(&a.out), &summary)?;
    Ok(summary)
}
