//! The self-training loop: judge and teacher from pseudo data, then
//! repeated rounds of pseudo-labeling a growing random sample of the
//! unlabeled pool, filtering it through the judge and fine-tuning a student
//! from the first teacher.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_tagged, Grammaticality, Sentence, TaggedSentence};
use crate::error::{Error, Result};
use crate::eval::{percent, score};
use crate::hashing::{derive_seed, item_seed, rng_for};
use crate::judge::{train_judge, GrammaticalityJudge, LinearJudge};
use crate::linear::TrainConfig;
use crate::perturb::{
    gen_disfluency_corpus, gen_judge_corpus, strip_d, GenerationSummary, NgramSampler,
};
use crate::tagger::{train, LinearTagger, SequenceTagger};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    pub iterations_max: usize,
    /// Explicit sample sizes L_1, L_2, ...; the last one repeats if the
    /// loop runs longer. `None` means `min(K, L_1 * 2^(t-1))` with
    /// `L_1 = max(1, K / 16)`.
    pub pool_schedule: Option<Vec<usize>>,
    pub selection_enabled: bool,
    pub seed: u64,
    /// Iterations without a dev F1 improvement before stopping.
    pub stop_patience: usize,
    /// Disfluency pseudo sentences for the teacher; `None` uses every
    /// fluent sentence.
    pub pseudo_size: Option<usize>,
    /// Judge training pairs; `None` uses every fluent sentence.
    pub judge_size: Option<usize>,
    pub error_fraction: f64,
    pub teacher: TrainConfig,
    pub student: TrainConfig,
    pub judge: TrainConfig,
}

impl Default for LoopConfig {
    fn default() -> Self {
        LoopConfig {
            iterations_max: 8,
            pool_schedule: None,
            selection_enabled: true,
            seed: 0,
            stop_patience: 2,
            pseudo_size: None,
            judge_size: None,
            error_fraction: 0.5,
            teacher: TrainConfig::default(),
            student: TrainConfig::default(),
            judge: TrainConfig::default(),
        }
    }
}

impl LoopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations_max == 0 {
            return Err(Error::Config("iterations_max must be positive".into()));
        }
        if let Some(s) = &self.pool_schedule {
            if s.is_empty() || s.contains(&0) {
                return Err(Error::Config(
                    "pool schedule entries must be positive".into(),
                ));
            }
            if s.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Config("pool schedule must be non-decreasing".into()));
            }
        }
        self.teacher.validate()?;
        self.student.validate()?;
        self.judge.validate()
    }

    /// L_t for iteration `t >= 1`, clamped to the pool size `k`.
    pub fn pool_size(&self, t: usize, k: usize) -> usize {
        let want = match &self.pool_schedule {
            Some(s) => s[(t - 1).min(s.len() - 1)],
            None => {
                let first = (k / 16).max(1);
                first.saturating_mul(1usize.checked_shl(t as u32 - 1).unwrap_or(usize::MAX))
            }
        };
        want.min(k)
    }
}

/// One row of the loop's metrics. Iteration 0 is the teacher. P/R/F1 are
/// fractions in memory and percentages in the files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: usize,
    #[serde(rename = "L_t")]
    pub pool_sampled: usize,
    #[serde(rename = "J_t")]
    pub selected: usize,
    #[serde(rename = "P")]
    pub precision: Option<f64>,
    #[serde(rename = "R")]
    pub recall: Option<f64>,
    #[serde(rename = "F1")]
    pub f1: Option<f64>,
    pub judge_pass_rate: Option<f64>,
    /// False when nothing survived selection and training was skipped.
    pub trained: bool,
    /// Pseudo-label F1 against pool gold, split by the judge's verdict.
    /// Only present when the pool comes with gold labels.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accepted_pseudo_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejected_pseudo_f1: Option<f64>,
    pub model_fingerprint: String,
}

impl IterationRecord {
    fn rendered(&self) -> IterationRecord {
        let p = |x: Option<f64>| x.map(percent);
        IterationRecord {
            precision: p(self.precision),
            recall: p(self.recall),
            f1: p(self.f1),
            judge_pass_rate: self.judge_pass_rate.map(|x| (x * 1e4).round() / 1e4),
            accepted_pseudo_f1: p(self.accepted_pseudo_f1),
            rejected_pseudo_f1: p(self.rejected_pseudo_f1),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSelection {
    /// Best dev F1.
    Dev,
    /// No dev set: the last model of the schedule.
    Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopState {
    pub records: Vec<IterationRecord>,
    pub best_iteration: usize,
    pub best_f1: Option<f64>,
    pub selection: ModelSelection,
    pub first_teacher_fingerprint: String,
    /// Fingerprint of the model each student started from, per iteration.
    pub student_init_fingerprints: Vec<String>,
}

impl LoopState {
    /// Dev F1 of the first teacher.
    pub fn teacher_f1(&self) -> Option<f64> {
        self.records.first().and_then(|r| r.f1)
    }
}

pub struct SelfTrainOutcome {
    pub best: LinearTagger,
    pub state: LoopState,
}

/// Uniform sample of `size` pool sentences without replacement, in pool
/// order. Deterministic in `(seed, t)`; `size` beyond the pool is clamped.
pub fn sample_pool(pool: &[Sentence], size: usize, seed: u64, t: usize) -> Vec<Sentence> {
    sample_pool_indices(pool.len(), size, seed, t)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect()
}

fn sample_pool_indices(k: usize, size: usize, seed: u64, t: usize) -> Vec<usize> {
    if size > k {
        log::warn!("pool sample of {size} exceeds pool size {k}; using the whole pool");
    }
    let size = size.min(k);
    let mut rng = rng_for(item_seed(derive_seed(seed, "pool-sample"), t as u64));
    let mut idx = sample_indices(&mut rng, k, size).into_vec();
    idx.sort_unstable();
    idx
}

/// True iff the judge calls the sentence with its D tokens removed right.
/// An empty remainder is rejected.
pub fn passes_judge(t: &TaggedSentence, judge: &dyn GrammaticalityJudge) -> Result<bool> {
    let sub = strip_d(t);
    if sub.is_empty() {
        return Ok(false);
    }
    Ok(judge.classify(&sub)? == Grammaticality::Right)
}

/// Keeps the pseudo-labeled sentences that pass the judge gate.
pub fn select_sentences(
    pseudo: &[TaggedSentence],
    judge: &dyn GrammaticalityJudge,
) -> Result<Vec<TaggedSentence>> {
    let verdicts = verdicts(pseudo, judge)?;
    Ok(pseudo
        .iter()
        .zip(verdicts)
        .filter(|(_, keep)| *keep)
        .map(|(t, _)| t.clone())
        .collect())
}

fn verdicts(pseudo: &[TaggedSentence], judge: &dyn GrammaticalityJudge) -> Result<Vec<bool>> {
    pseudo.par_iter().map(|t| passes_judge(t, judge)).collect()
}

fn subset_f1(
    gold: &[TaggedSentence],
    pred: &[TaggedSentence],
    keep: &[bool],
    want: bool,
) -> Result<Option<f64>> {
    let (g, p): (Vec<_>, Vec<_>) = gold
        .iter()
        .zip(pred)
        .zip(keep)
        .filter(|(_, &k)| k == want)
        .map(|((g, p), _)| (g.clone(), p.clone()))
        .unzip();
    if g.is_empty() {
        return Ok(None);
    }
    Ok(Some(score(&g, &p)?.f1()))
}

struct Checkpoints {
    root: PathBuf,
    metrics: BufWriter<File>,
}

impl Checkpoints {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        let path = root.join("metrics.jsonl");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok(Checkpoints {
            root: root.to_path_buf(),
            metrics: BufWriter::new(file),
        })
    }

    fn iter_dir(t: usize) -> String {
        format!("iter-{t:03}")
    }

    fn record(
        &mut self,
        rec: &IterationRecord,
        model: &LinearTagger,
        selected: Option<&[TaggedSentence]>,
    ) -> Result<()> {
        let dir = self.root.join(Self::iter_dir(rec.t));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        model.save(dir.join("model.bin"))?;
        if let Some(sel) = selected {
            write_tagged(dir.join("selected.tsv"), sel)?;
        }
        let json = serde_json::to_string_pretty(&rec.rendered())?;
        let path = dir.join("metrics.json");
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
        let line = serde_json::to_string(&rec.rendered())?;
        let path = self.root.join("metrics.jsonl");
        writeln!(self.metrics, "{line}")
            .and_then(|_| self.metrics.flush())
            .map_err(|e| Error::io(&path, e))
    }
}

fn write_manifest(root: &Path, state: &LoopState, extra: serde_json::Value) -> Result<()> {
    let mut manifest = serde_json::json!({
        "best_iteration": state.best_iteration,
        "best_checkpoint": format!("{}/model.bin", Checkpoints::iter_dir(state.best_iteration)),
        "best_f1": state.best_f1.map(percent),
        "model_selection": state.selection,
        "iterations_run": state.records.len() - 1,
        "first_teacher_fingerprint": state.first_teacher_fingerprint,
    });
    if let (Some(m), serde_json::Value::Object(extra)) = (manifest.as_object_mut(), extra) {
        m.extend(extra);
    }
    let path = root.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .map_err(|e| Error::io(&path, e))
}

fn dev_scores(
    model: &LinearTagger,
    dev: Option<&[TaggedSentence]>,
) -> Result<(Option<f64>, Option<f64>, Option<f64>)> {
    let Some(dev) = dev else {
        return Ok((None, None, None));
    };
    let sentences: Vec<Sentence> = dev.iter().map(|t| t.sentence().clone()).collect();
    let r = score(dev, &model.predict_all(&sentences)?)?;
    Ok((Some(r.precision()), Some(r.recall()), Some(r.f1())))
}

/// Steps 3 to 6 of the loop, starting from a trained teacher and judge.
/// `pool_gold`, when given, must align with `pool` and is used only for the
/// accepted/rejected pseudo-label diagnostics.
pub fn run_self_training(
    teacher: &LinearTagger,
    judge: &dyn GrammaticalityJudge,
    pool: &[Sentence],
    pool_gold: Option<&[TaggedSentence]>,
    dev: Option<&[TaggedSentence]>,
    config: &LoopConfig,
    out_dir: Option<&Path>,
) -> Result<SelfTrainOutcome> {
    config.validate()?;
    if pool.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(gold) = pool_gold {
        if gold.len() != pool.len() {
            return Err(Error::Alignment {
                index: gold.len().min(pool.len()),
                message: format!(
                    "pool has {} sentences, pool gold has {}",
                    pool.len(),
                    gold.len()
                ),
            });
        }
    }
    let dev = dev.filter(|d| !d.is_empty());
    let mut ckpt = out_dir.map(Checkpoints::create).transpose()?;

    let first_fp = teacher.fingerprint();
    let (p, r, f1) = dev_scores(teacher, dev)?;
    let rec0 = IterationRecord {
        t: 0,
        pool_sampled: 0,
        selected: 0,
        precision: p,
        recall: r,
        f1,
        judge_pass_rate: None,
        trained: true,
        accepted_pseudo_f1: None,
        rejected_pseudo_f1: None,
        model_fingerprint: first_fp.clone(),
    };
    log::info!("teacher: dev F1 {:?}", f1.map(percent));
    if let Some(c) = ckpt.as_mut() {
        c.record(&rec0, teacher, None)?;
    }

    let mut state = LoopState {
        records: vec![rec0],
        best_iteration: 0,
        best_f1: f1,
        selection: if dev.is_some() {
            ModelSelection::Dev
        } else {
            ModelSelection::Schedule
        },
        first_teacher_fingerprint: first_fp,
        student_init_fingerprints: Vec::new(),
    };
    let mut best = teacher.clone();
    let mut current = teacher.clone();
    let mut stale = 0;

    for t in 1..=config.iterations_max {
        let size = config.pool_size(t, pool.len());
        let idx = sample_pool_indices(pool.len(), size, config.seed, t);
        let sample: Vec<Sentence> = idx.iter().map(|&i| pool[i].clone()).collect();
        let pseudo = current.predict_all(&sample)?;
        let keep = verdicts(&pseudo, judge)?;
        let passed = keep.iter().filter(|&&k| k).count();

        let (accepted_pseudo_f1, rejected_pseudo_f1) = match pool_gold {
            Some(gold) => {
                let g: Vec<TaggedSentence> = idx.iter().map(|&i| gold[i].clone()).collect();
                (
                    subset_f1(&g, &pseudo, &keep, true)?,
                    subset_f1(&g, &pseudo, &keep, false)?,
                )
            }
            None => (None, None),
        };

        let selected: Vec<TaggedSentence> = if config.selection_enabled {
            pseudo
                .into_iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(t, _)| t)
                .collect()
        } else {
            pseudo
        };

        let trained = !selected.is_empty();
        if trained {
            let student_config = TrainConfig {
                seed: derive_seed(config.seed, &format!("student-{t}")),
                ..config.student.clone()
            };
            state.student_init_fingerprints.push(teacher.fingerprint());
            current = train(&selected, &student_config, Some(teacher))?;
        } else {
            log::warn!("iteration {t}: no sentence passed selection; skipping student training");
        }

        let (p, r, f1) = dev_scores(&current, dev)?;
        let rec = IterationRecord {
            t,
            pool_sampled: sample.len(),
            selected: selected.len(),
            precision: p,
            recall: r,
            f1,
            judge_pass_rate: Some(passed as f64 / sample.len() as f64),
            trained,
            accepted_pseudo_f1,
            rejected_pseudo_f1,
            model_fingerprint: current.fingerprint(),
        };
        log::info!(
            "iteration {t}: L={} J={} dev F1 {:?}",
            rec.pool_sampled,
            rec.selected,
            f1.map(percent)
        );
        if let Some(c) = ckpt.as_mut() {
            c.record(&rec, &current, Some(&selected))?;
        }
        state.records.push(rec);

        match (dev, f1) {
            (Some(_), Some(f1)) => {
                if trained && state.best_f1.is_none_or(|b| f1 > b) {
                    state.best_f1 = Some(f1);
                    state.best_iteration = t;
                    best = current.clone();
                    stale = 0;
                } else {
                    stale += 1;
                }
                if stale >= config.stop_patience.max(1) {
                    log::info!("stopping: no dev improvement for {stale} iterations");
                    break;
                }
            }
            _ => {
                state.best_iteration = t;
                best = current.clone();
            }
        }
    }

    if let Some(dir) = out_dir {
        write_manifest(dir, &state, serde_json::json!({}))?;
    }
    Ok(SelfTrainOutcome { best, state })
}

/// Everything [`run_pipeline`] trained, for callers that need more than the
/// best student.
pub struct PipelineOutcome {
    pub teacher: LinearTagger,
    pub judge: LinearJudge,
    pub pseudo_summary: GenerationSummary,
    pub judge_summary: GenerationSummary,
    pub self_training: SelfTrainOutcome,
}

/// Teacher for a given pseudo-corpus size, trained on the first `size`
/// fluent sentences with insertions drawn from `sampler`.
pub fn train_teacher(
    fluent: &[Sentence],
    sampler: &NgramSampler,
    size: usize,
    config: &LoopConfig,
) -> Result<(LinearTagger, GenerationSummary)> {
    let (pseudo, summary) = gen_disfluency_corpus(
        fluent,
        sampler,
        size,
        derive_seed(config.seed, "pseudo-corpus"),
    )?;
    let teacher_config = TrainConfig {
        seed: derive_seed(config.seed, "teacher"),
        ..config.teacher.clone()
    };
    Ok((train(&pseudo, &teacher_config, None)?, summary))
}

/// The full loop from a fluent corpus and an unlabeled pool. Stage seeds
/// are derived from `config.seed`; the seeds inside the three
/// [`TrainConfig`]s are ignored.
pub fn run_pipeline(
    fluent: &[Sentence],
    pool: &[Sentence],
    pool_gold: Option<&[TaggedSentence]>,
    dev: Option<&[TaggedSentence]>,
    config: &LoopConfig,
    out_dir: Option<&Path>,
) -> Result<PipelineOutcome> {
    config.validate()?;
    if fluent.is_empty() || pool.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let sampler = NgramSampler::new(fluent)?;

    let judge_size = config.judge_size.unwrap_or(fluent.len());
    let (judge_corpus, judge_summary) = gen_judge_corpus(
        fluent,
        &sampler,
        judge_size,
        config.error_fraction,
        derive_seed(config.seed, "judge-corpus"),
    )?;
    let judge_config = TrainConfig {
        seed: derive_seed(config.seed, "judge"),
        ..config.judge.clone()
    };
    let judge = train_judge(&judge_corpus, &judge_config)?;
    log::info!("judge: held-out accuracy {:?}", judge.held_out_accuracy());

    let size = config.pseudo_size.unwrap_or(fluent.len());
    let (teacher, pseudo_summary) = train_teacher(fluent, &sampler, size, config)?;

    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        judge.save(dir.join("judge.bin"))?;
    }
    let self_training = run_self_training(&teacher, &judge, pool, pool_gold, dev, config, out_dir)?;
    if let Some(dir) = out_dir {
        // Re-write the manifest with the pipeline-level facts added.
        write_manifest(
            dir,
            &self_training.state,
            serde_json::json!({
                "judge_checkpoint": "judge.bin",
                "judge_held_out_accuracy": judge.held_out_accuracy().map(percent),
                "pseudo_sentences": pseudo_summary.emitted,
                "judge_sentences": judge_summary.emitted,
            }),
        )?;
    }
    Ok(PipelineOutcome {
        teacher,
        judge,
        pseudo_summary,
        judge_summary,
        self_training,
    })
}
