//! End-to-end acceptance checks. Runs without the libtest harness so each
//! check prints exactly one PASS/FAIL line; the process fails if any check
//! fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use disfl::eval::{harmonic_f1, percent, score, score_by_category};
use disfl::hashing::rng_for;
use disfl::judge::train_judge;
use disfl::linear::{training_split, TrainConfig};
use disfl::perturb::{gen_disfluency_corpus, gen_judge_corpus, strip_d, NgramSampler};
use disfl::selftrain::{run_pipeline, train_teacher, LoopConfig, LoopState};
use disfl::synth::{generate, Style};
use disfl::{Label, LinearTagger, Sentence, SequenceTagger, TaggedSentence};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sentences(tagged: &[TaggedSentence]) -> Vec<Sentence> {
    tagged.iter().map(|t| t.sentence().clone()).collect()
}

fn reconstruction() -> Outcome {
    let fluent = generate(Style::News, 12_000, 101);
    let news = NgramSampler::new(&fluent).unwrap();
    let speech = NgramSampler::new(&generate(Style::Speech, 2_000, 102)).unwrap();
    let mut total = 0;
    let mut bad = 0;
    for (sampler, seed) in [(&news, 1), (&speech, 2)] {
        let (corpus, _) = gen_disfluency_corpus(&fluent, sampler, fluent.len(), seed).unwrap();
        total += corpus.len();
        bad += corpus
            .iter()
            .zip(&fluent)
            .filter(|(t, src)| strip_d(t).tokens() != src.tokens())
            .count();
    }
    check(
        total >= 10_000 && bad == 0,
        format!(
            "{} of {total} pseudo sentences reconstruct their source",
            total - bad
        ),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Runs every command in a fresh directory and returns all artifacts plus
/// the stdout of each command.
fn cli_session(workers: &str) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let dir = tempfile::tempdir().unwrap();
    let steps: &[&[&str]] = &[
        &[
            "synth", "--style", "news", "--count", "3000", "--out", "news.txt",
        ],
        &[
            "synth",
            "--style",
            "speech",
            "--count",
            "500",
            "--out",
            "speech.txt",
            "--seed",
            "2",
        ],
        &[
            "synth",
            "--style",
            "news",
            "--count",
            "600",
            "--out",
            "pool-src.txt",
            "--seed",
            "3",
        ],
        &[
            "gen-pseudo",
            "disfluency",
            "--fluent",
            "news.txt",
            "--count",
            "2500",
            "--out",
            "pseudo.tsv",
            "--seed",
            "7",
        ],
        &[
            "gen-pseudo",
            "judge",
            "--fluent",
            "news.txt",
            "--error-fraction",
            "0.5",
            "--out",
            "judge.tsv",
            "--seed",
            "7",
        ],
        &[
            "gen-pseudo",
            "disfluency",
            "--fluent",
            "pool-src.txt",
            "--ngram-source",
            "speech.txt",
            "--out",
            "pool.tsv",
        ],
        &[
            "train",
            "teacher",
            "--corpus",
            "pseudo.tsv",
            "--out",
            "teacher.bin",
            "--epochs",
            "2",
            "--hash-bits",
            "16",
        ],
        &[
            "train",
            "judge",
            "--corpus",
            "judge.tsv",
            "--out",
            "judge.bin",
            "--epochs",
            "2",
            "--hash-bits",
            "16",
        ],
        &[
            "infer",
            "--model",
            "teacher.bin",
            "--input",
            "pool.tsv",
            "--tagged",
            "--out",
            "pred.tsv",
            "--clean",
            "clean.txt",
        ],
        &[
            "evaluate",
            "--gold",
            "pool.tsv",
            "--pred",
            "pred.tsv",
            "--by-category",
            "--report",
            "report.json",
        ],
        &[
            "selftrain",
            "--fluent",
            "news.txt",
            "--pool-gold",
            "pool.tsv",
            "--dev",
            "pool.tsv",
            "--out-dir",
            "run",
            "--iterations",
            "2",
            "--epochs",
            "2",
            "--hash-bits",
            "16",
        ],
        &[
            "selftrain",
            "--fluent",
            "news.txt",
            "--pool-gold",
            "pool.tsv",
            "--dev",
            "pool.tsv",
            "--out-dir",
            "sweep",
            "--pseudo-size",
            "500,1000",
            "--epochs",
            "1",
            "--hash-bits",
            "16",
        ],
    ];
    let mut stdout = Vec::new();
    for args in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_disfl"))
            .args(*args)
            .args(["--workers", workers])
            .current_dir(dir.path())
            .output()
            .unwrap();
        if !out.status.success() {
            return Err(format!(
                "`disfl {}` failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        stdout.extend(out.stdout);
    }
    let mut files = snapshot(dir.path());
    files.insert("<stdout>".into(), stdout);
    Ok(files)
}

fn cli_determinism() -> Outcome {
    let a = cli_session("1")?;
    let b = cli_session("4")?;
    let differing: Vec<&String> = a
        .keys()
        .chain(b.keys())
        .filter(|k| a.get(*k) != b.get(*k))
        .collect();
    check(
        differing.is_empty(),
        format!(
            "{} artifacts compared across two runs (1 and 4 workers); differing: {differing:?}",
            a.len()
        ),
    )
}

fn random_pair(rng: &mut impl Rng) -> (TaggedSentence, TaggedSentence) {
    let n = rng.gen_range(1..40);
    let toks: Vec<String> = (0..n)
        .map(|_| format!("w{}", rng.gen_range(0..5)))
        .collect();
    let s = Sentence::new(toks).unwrap();
    let p_d = rng.gen_range(0.0..1.0);
    let mut labels = || -> Vec<Label> {
        (0..n)
            .map(|_| {
                if rng.gen_bool(p_d) {
                    Label::D
                } else {
                    Label::O
                }
            })
            .collect()
    };
    let g = labels();
    let p = labels();
    (
        TaggedSentence::new(s.clone(), g).unwrap(),
        TaggedSentence::new(s, p).unwrap(),
    )
}

fn metric_correctness() -> Outcome {
    let mut rng = rng_for(2024);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let (g, p) = random_pair(&mut rng);
        let r = score(std::slice::from_ref(&g), std::slice::from_ref(&p)).unwrap();
        // independent recount
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for i in 0..g.len() {
            let gd = g.labels()[i] == Label::D;
            let pd = p.labels()[i] == Label::D;
            tp += u64::from(gd && pd);
            fp += u64::from(!gd && pd);
            fn_ += u64::from(gd && !pd);
        }
        let prec = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let rec = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1 = if prec + rec == 0.0 {
            0.0
        } else {
            2.0 * prec * rec / (prec + rec)
        };
        let o = r.overall;
        if (o.tp, o.fp, o.fn_) != (tp, fp, fn_)
            || o.precision != prec
            || o.recall != rec
            || o.f1 != f1
        {
            mismatches += 1;
        }
    }
    let reported = percent(harmonic_f1(0.902, 0.891));
    check(
        mismatches == 0 && reported == 89.6,
        format!("{mismatches} mismatches in 1000 pairs; F1(90.2, 89.1) = {reported}"),
    )
}

struct Teacher {
    model: LinearTagger,
    held_out: Vec<TaggedSentence>,
}

fn teacher_50k() -> Teacher {
    let fluent = generate(Style::News, 50_000, 201);
    let sampler = NgramSampler::new(&fluent).unwrap();
    let (pseudo, _) = gen_disfluency_corpus(&fluent, &sampler, fluent.len(), 202).unwrap();
    let config = TrainConfig {
        seed: 203,
        ..Default::default()
    };
    let model = disfl::train(&pseudo, &config, None).unwrap();
    let (_, held_out) = training_split(&pseudo, &config);
    Teacher { model, held_out }
}

fn teacher_sanity(t: &Teacher) -> Outcome {
    let pred = t.model.predict_all(&sentences(&t.held_out)).unwrap();
    let r = score(&t.held_out, &pred).unwrap();
    check(
        r.f1() >= 0.80,
        format!(
            "held-out F1 {:.1} (P {:.1}, R {:.1}) on {} sentences; need >= 80.0",
            percent(r.f1()),
            percent(r.precision()),
            percent(r.recall()),
            t.held_out.len()
        ),
    )
}

fn judge_sanity() -> Outcome {
    let fluent = generate(Style::News, 100_000, 301);
    let sampler = NgramSampler::new(&fluent).unwrap();
    let (corpus, _) = gen_judge_corpus(&fluent, &sampler, fluent.len(), 0.5, 302).unwrap();
    let config = TrainConfig {
        seed: 303,
        ..Default::default()
    };
    let judge = train_judge(&corpus, &config).unwrap();
    let (_, held_out) = training_split(&corpus, &config);
    let acc = judge.accuracy(&held_out).unwrap();
    check(
        acc >= 0.85 && judge.held_out_accuracy() == Some(acc),
        format!(
            "held-out accuracy {:.1} on {} pairs; need >= 85.0",
            percent(acc),
            held_out.len()
        ),
    )
}

/// Teacher pseudo data comes from news text; the pool and dev set are news
/// sentences whose insertions come from conversational text instead.
struct ShiftRuns {
    select: LoopState,
    no_select: LoopState,
}

fn shift_runs() -> ShiftRuns {
    let fluent = generate(Style::News, 20_000, 401);
    let speech = NgramSampler::new(&generate(Style::Speech, 5_000, 402)).unwrap();
    let src = generate(Style::News, 10_000, 403);
    let (pool_gold, _) = gen_disfluency_corpus(&src[..8_000], &speech, 8_000, 404).unwrap();
    let (dev, _) = gen_disfluency_corpus(&src[8_000..], &speech, 2_000, 405).unwrap();
    let pool = sentences(&pool_gold);
    let run = |selection_enabled: bool| {
        let config = LoopConfig {
            selection_enabled,
            iterations_max: 6,
            seed: 406,
            ..Default::default()
        };
        run_pipeline(&fluent, &pool, Some(&pool_gold), Some(&dev), &config, None)
            .unwrap()
            .self_training
            .state
    };
    ShiftRuns {
        select: run(true),
        no_select: run(false),
    }
}

fn selection_quality(r: &ShiftRuns) -> Outcome {
    let gaps: Vec<Option<f64>> = r.select.records[1..]
        .iter()
        .map(|rec| Some(percent(rec.accepted_pseudo_f1?) - percent(rec.rejected_pseudo_f1?)))
        .collect();
    let ok = !gaps.is_empty() && gaps.iter().all(|g| g.is_some_and(|g| g >= 2.0));
    let shown: Vec<String> = r.select.records[1..]
        .iter()
        .map(|rec| {
            format!(
                "{:.1}/{:.1}",
                percent(rec.accepted_pseudo_f1.unwrap_or(f64::NAN)),
                percent(rec.rejected_pseudo_f1.unwrap_or(f64::NAN))
            )
        })
        .collect();
    check(
        ok,
        format!(
            "accepted/rejected pseudo-label F1 per iteration: {}; need gap >= 2.0",
            shown.join(", ")
        ),
    )
}

fn self_training_gain(r: &ShiftRuns) -> Outcome {
    let teacher = r.select.teacher_f1().unwrap();
    let gain = r.select.best_f1.unwrap() - teacher;
    let ns_gain = r.no_select.best_f1.unwrap() - r.no_select.teacher_f1().unwrap();
    let curve = |s: &LoopState| -> String {
        s.records
            .iter()
            .map(|x| format!("{:.1}", percent(x.f1.unwrap())))
            .collect::<Vec<_>>()
            .join(" ")
    };
    check(
        gain > 0.0 && gain >= ns_gain,
        format!(
            "teacher {:.1}; select best {:.1} (gain {:+.1}, curve {}); no-select best {:.1} (gain {:+.1}, curve {})",
            percent(teacher),
            percent(r.select.best_f1.unwrap()),
            100.0 * gain,
            curve(&r.select),
            percent(r.no_select.best_f1.unwrap()),
            100.0 * ns_gain,
            curve(&r.no_select),
        ),
    )
}

fn pseudo_size_sweep() -> Outcome {
    let fluent = generate(Style::News, 40_000, 501);
    let sampler = NgramSampler::new(&fluent).unwrap();
    let (dev, _) =
        gen_disfluency_corpus(&generate(Style::News, 3_000, 502), &sampler, 3_000, 503).unwrap();
    let config = LoopConfig {
        seed: 504,
        ..Default::default()
    };
    let f1s: Vec<f64> = [5_000, 10_000, 20_000, 40_000]
        .iter()
        .map(|&n| {
            let (teacher, _) = train_teacher(&fluent, &sampler, n, &config).unwrap();
            let pred = teacher.predict_all(&sentences(&dev)).unwrap();
            100.0 * score(&dev, &pred).unwrap().f1()
        })
        .collect();
    let inc: Vec<f64> = f1s.windows(2).map(|w| w[1] - w[0]).collect();
    let non_decreasing = inc.iter().all(|&d| d >= -1.0);
    let saturating = inc[2] <= inc[0] + 1.0;
    check(
        non_decreasing && saturating,
        format!(
            "dev F1 at 5k/10k/20k/40k: {}; increments {}",
            f1s.iter()
                .map(|f| format!("{f:.1}"))
                .collect::<Vec<_>>()
                .join(" "),
            inc.iter()
                .map(|d| format!("{d:+.1}"))
                .collect::<Vec<_>>()
                .join(" ")
        ),
    )
}

fn category_breakdown(t: &Teacher) -> Outcome {
    let pred = t.model.predict_all(&sentences(&t.held_out)).unwrap();
    let r = score_by_category(&t.held_out, &pred).unwrap();
    let c = r.categories.unwrap();
    check(
        c.repetition.f1 >= c.non_repetition.f1,
        format!(
            "repetition F1 {:.1}, non-repetition F1 {:.1}, either {:.1}",
            percent(c.repetition.f1),
            percent(c.non_repetition.f1),
            percent(r.f1())
        ),
    )
}

fn main() {
    // `cargo test -- --list` and filters: nothing to enumerate here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = 0;
    let mut report = |name: &str, start: Instant, outcome: Outcome| {
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS  {name:<22} {d} [{secs:.0}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name:<22} {d} [{secs:.0}s]");
            }
        }
    };

    let t = Instant::now();
    report("reconstruction", t, reconstruction());
    let t = Instant::now();
    report("cli-determinism", t, cli_determinism());
    let t = Instant::now();
    report("metric-correctness", t, metric_correctness());
    let t = Instant::now();
    let teacher = teacher_50k();
    report("teacher-sanity", t, teacher_sanity(&teacher));
    let t = Instant::now();
    report("judge-sanity", t, judge_sanity());
    let t = Instant::now();
    let runs = shift_runs();
    report("selection-quality", t, selection_quality(&runs));
    report("self-training-gain", t, self_training_gain(&runs));
    let t = Instant::now();
    report("pseudo-size-sweep", t, pseudo_size_sweep());
    let t = Instant::now();
    report("category-breakdown", t, category_breakdown(&teacher));

    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
