//! Whole-sentence grammaticality classifier (right vs error).
//!
//! The reference backend scores a bag of hashed uni/bi/trigrams, repeated
//! n-gram indicators, a length bucket and counts of n-grams never seen in
//! the right-labeled training sentences.

use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Grammaticality, JudgedSentence, Sentence};
use crate::error::{Error, Result};
use crate::hashing::{combine, derive_seed, token_hash, Fnv};
use crate::linear::{fit, training_split, Featurize, Instance, TrainConfig, Weights};
use crate::model_io::{self, ModelHeader, ModelKind, TrainingMetadata};
use crate::ngram::{bounded_hashes, ngram_key, CountView, NgramCounts, OOV};

pub const BACKEND_ID: &str = "reference-linear-v1";

const MAX_REPEAT: usize = 6;
const REPEAT_WINDOW: usize = 12;

pub trait GrammaticalityJudge: Send + Sync {
    fn backend_id(&self) -> &str;

    /// Exactly one label. Errors on an empty sentence.
    fn classify(&self, sentence: &Sentence) -> Result<Grammaticality>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearJudge {
    weights: Weights,
    stats: NgramCounts,
    metadata: TrainingMetadata,
}

const T_BIAS: u64 = 1;
const T_NGRAM: u64 = 2;
const T_ADJ_REPEAT: u64 = 3;
const T_NEAR_REPEAT: u64 = 4;
const T_LEN: u64 = 5;
const T_UNSEEN: u64 = 6;
const T_UNSEEN_PAIR: u64 = 7;

fn feature(mask: u64, template: u64, a: u64, b: u64) -> u32 {
    (combine(combine(template, a), b) & mask) as u32
}

fn unseen_bucket(n: usize) -> u64 {
    n.min(4) as u64
}

#[allow(clippy::needless_range_loop)]
fn sentence_features<S: AsRef<str>>(tokens: &[S], view: CountView<'_>, mask: u64) -> Vec<u32> {
    let n = tokens.len();
    let hashes = bounded_hashes(tokens);
    let oov = token_hash(OOV);
    let vocab: Vec<u64> = hashes
        .iter()
        .enumerate()
        .map(|(j, &h)| {
            let inner = j > 0 && j + 1 < hashes.len();
            if inner && view.get(ngram_key(&[h])) == 0 {
                oov
            } else {
                h
            }
        })
        .collect();

    let mut f = Vec::with_capacity(4 * n + 24);
    f.push(feature(mask, T_BIAS, 0, 0));
    let mut unseen = [0usize; 4];
    for order in 1..=3 {
        for (w, v) in hashes.windows(order).zip(vocab.windows(order)) {
            f.push(feature(mask, T_NGRAM, order as u64, ngram_key(v)));
            if view.get(ngram_key(w)) == 0 {
                unseen[order] += 1;
            }
        }
    }
    f.push(feature(mask, T_UNSEEN, 1, unseen_bucket(unseen[1])));
    f.push(feature(mask, T_UNSEEN, 2, unseen_bucket(unseen[2])));
    f.push(feature(mask, T_UNSEEN, 3, unseen_bucket(unseen[3])));
    f.push(feature(
        mask,
        T_UNSEEN_PAIR,
        unseen_bucket(unseen[2]),
        unseen_bucket(unseen[3]),
    ));

    let raw = &hashes[1..hashes.len() - 1];
    let same = |a: usize, b: usize, len: usize| (0..len).all(|o| raw[a + o] == raw[b + o]);
    for len in 1..=MAX_REPEAT {
        if 2 * len > n {
            break;
        }
        let adjacent = (0..=n - 2 * len).any(|s| same(s, s + len, len));
        if adjacent {
            f.push(feature(mask, T_ADJ_REPEAT, len as u64, 0));
        }
        let near = (0..=n - len).any(|s| {
            (s + 1..=(s + REPEAT_WINDOW).min(n - len)).any(|t| t >= s + len && same(s, t, len))
        });
        if near {
            f.push(feature(mask, T_NEAR_REPEAT, len as u64, 0));
        }
    }
    f.push(feature(mask, T_LEN, (n / 4).min(8) as u64, 0));
    f
}

fn right_counts(s: &Sentence) -> NgramCounts {
    let mut c = NgramCounts::new();
    c.add(&bounded_hashes(s.tokens()), 1..=3);
    c
}

struct JudgeFeaturizer<'a> {
    table: &'a NgramCounts,
    mask: u64,
}

impl Featurize for JudgeFeaturizer<'_> {
    type Item = JudgedSentence;

    fn instances(&self, item: &JudgedSentence, training: bool, out: &mut Vec<Instance>) {
        let own;
        let view = if training && item.label == Grammaticality::Right {
            own = right_counts(&item.sentence);
            CountView::excluding(self.table, &own)
        } else {
            CountView::new(self.table)
        };
        out.push(Instance {
            features: sentence_features(item.sentence.tokens(), view, self.mask),
            target: item.label == Grammaticality::Error,
        });
    }
}

fn corpus_fingerprint(corpus: &[JudgedSentence]) -> String {
    let mut h = Fnv::default();
    for j in corpus {
        h.write(j.label.as_str().as_bytes());
        h.write(b"\t");
        h.write(j.sentence.to_line().as_bytes());
        h.write(b"\n");
    }
    format!("{:016x}", h.finish())
}

/// Trains a judge. Held-out accuracy lands in `metadata().fit.dev_accuracy`.
pub fn train_judge(corpus: &[JudgedSentence], config: &TrainConfig) -> Result<LinearJudge> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let rights = corpus
        .iter()
        .filter(|j| j.label == Grammaticality::Right)
        .count();
    if rights == 0 {
        return Err(Error::SingleClass("error".into()));
    }
    if rights == corpus.len() {
        return Err(Error::SingleClass("right".into()));
    }
    if corpus.iter().any(|j| j.sentence.is_empty()) {
        return Err(Error::EmptySentence);
    }

    let (train_split, dev_split) = training_split(corpus, config);
    let mut table = NgramCounts::new();
    for j in train_split
        .iter()
        .filter(|j| j.label == Grammaticality::Right)
    {
        table.merge(&right_counts(&j.sentence));
    }
    let start = Weights::zeros(config.hash_bits);
    let featurizer = JudgeFeaturizer {
        table: &table,
        mask: start.mask(),
    };
    let sgd_config = TrainConfig {
        seed: derive_seed(config.seed, "sgd"),
        ..config.clone()
    };
    let (weights, report) = fit(&featurizer, &train_split, &dev_split, start, &sgd_config);
    log::info!(
        "judge: {} epochs on {} sentences, held-out accuracy {:?}",
        report.epochs_run,
        report.train_items,
        report.dev_accuracy
    );
    Ok(LinearJudge {
        weights,
        stats: table,
        metadata: TrainingMetadata {
            config: config.clone(),
            corpus_fingerprint: corpus_fingerprint(corpus),
            fit: report,
            init_fingerprint: None,
        },
    })
}

impl LinearJudge {
    pub fn metadata(&self) -> &TrainingMetadata {
        &self.metadata
    }

    /// Held-out accuracy measured at training time.
    pub fn held_out_accuracy(&self) -> Option<f64> {
        self.metadata.fit.dev_accuracy
    }

    pub fn fingerprint(&self) -> String {
        model_io::fingerprint(&self.stats, &self.weights)
    }

    /// Logit of the error class.
    pub fn error_score(&self, sentence: &Sentence) -> Result<f64> {
        if sentence.is_empty() {
            return Err(Error::EmptySentence);
        }
        let f = sentence_features(
            sentence.tokens(),
            CountView::new(&self.stats),
            self.weights.mask(),
        );
        Ok(self.weights.score(&f))
    }

    /// Fraction of `corpus` classified correctly.
    pub fn accuracy(&self, corpus: &[JudgedSentence]) -> Result<f64> {
        if corpus.is_empty() {
            return Ok(0.0);
        }
        let correct: usize = corpus
            .par_iter()
            .map(|j| {
                self.classify(&j.sentence)
                    .map(|l| usize::from(l == j.label))
            })
            .sum::<Result<usize>>()?;
        Ok(correct as f64 / corpus.len() as f64)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = ModelHeader {
            backend: BACKEND_ID.into(),
            metadata: self.metadata.clone(),
        };
        model_io::encode(ModelKind::Judge, &header, &self.stats, &self.weights)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, stats, weights): (ModelHeader, _, _) =
            model_io::decode(ModelKind::Judge, bytes)?;
        if header.backend != BACKEND_ID {
            return Err(Error::BackendMismatch {
                expected: BACKEND_ID.into(),
                found: header.backend,
            });
        }
        Ok(LinearJudge {
            weights,
            stats,
            metadata: header.metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        model_io::write_file(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&model_io::read_file(path.as_ref())?)
    }
}

impl GrammaticalityJudge for LinearJudge {
    fn backend_id(&self) -> &str {
        BACKEND_ID
    }

    fn classify(&self, sentence: &Sentence) -> Result<Grammaticality> {
        Ok(if self.error_score(sentence)? > 0.0 {
            Grammaticality::Error
        } else {
            Grammaticality::Right
        })
    }
}
