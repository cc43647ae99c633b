//! Per-token D/O tagger.
//!
//! [`SequenceTagger`] is the backend-neutral interface. [`LinearTagger`] is
//! the self-contained reference backend: hashed logistic regression over
//! lexical window features, copy/repeat indicators and n-gram familiarity
//! features computed against a bigram table built from the fluent part
//! (labels O) of its training data.

use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{Label, Sentence, TaggedSentence};
use crate::error::{Error, Result};
use crate::hashing::{combine, token_hash, Fnv};
use crate::linear::{fit, training_split, Featurize, Instance, TrainConfig, Weights};
use crate::model_io::{self, ModelHeader, ModelKind, TrainingMetadata};
use crate::ngram::{
    bounded_hashes, count_bucket, ngram_key, CountView, NgramCounts, BOS, EOS, OOV, PAD,
};
use crate::perturb::strip_d;

pub const BACKEND_ID: &str = "reference-linear-v1";

/// Longest span covered by the copy and bridge features.
const MAX_SPAN: usize = 6;
const WINDOW: isize = 3;

pub trait SequenceTagger: Send + Sync {
    fn backend_id(&self) -> &str;

    /// One label per token. Errors on an empty sentence.
    fn predict(&self, sentence: &Sentence) -> Result<TaggedSentence>;

    fn predict_all(&self, sentences: &[Sentence]) -> Result<Vec<TaggedSentence>> {
        sentences.par_iter().map(|s| self.predict(s)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearTagger {
    weights: Weights,
    stats: NgramCounts,
    metadata: TrainingMetadata,
}

// Feature templates.
const T_BIAS: u64 = 1;
const T_ID: u64 = 2;
const T_CONJ: u64 = 3;
const T_EQ: u64 = 4;
const T_BIGRAM_MATCH: u64 = 5;
const T_COPY: u64 = 6;
const T_POS: u64 = 7;
const T_LEN: u64 = 8;
const T_FREQ: u64 = 9;
const T_FAM: u64 = 10;
const T_BRIDGE: u64 = 11;
const T_BRIDGE_ANY: u64 = 12;
const T_TRI: u64 = 13;
const T_BRIDGE_TRI: u64 = 14;

struct Markers {
    bos: u64,
    eos: u64,
    pad: u64,
    oov: u64,
}

impl Markers {
    fn get() -> Self {
        Markers {
            bos: token_hash(BOS),
            eos: token_hash(EOS),
            pad: token_hash(PAD),
            oov: token_hash(OOV),
        }
    }
}

/// Counts a training sentence contributes to the table: unigrams over all
/// tokens, bigrams and trigrams over its fluent (O) part.
fn sentence_counts(t: &TaggedSentence) -> NgramCounts {
    let mut c = NgramCounts::new();
    c.add(&bounded_hashes(t.tokens()), 1..=1);
    c.add(&bounded_hashes(strip_d(t).tokens()), 2..=3);
    c
}

fn build_table<'a>(corpus: impl IntoIterator<Item = &'a TaggedSentence>) -> NgramCounts {
    let mut table = NgramCounts::new();
    for t in corpus {
        table.merge(&sentence_counts(t));
    }
    table
}

fn feature(mask: u64, template: u64, a: u64, b: u64) -> u32 {
    (combine(combine(template, a), b) & mask) as u32
}

/// Feature indices for every token of `tokens`.
#[allow(clippy::needless_range_loop)]
fn token_features<S: AsRef<str>>(tokens: &[S], view: CountView<'_>, mask: u64) -> Vec<Vec<u32>> {
    let n = tokens.len();
    let ni = n as isize;
    let m = Markers::get();
    let raw: Vec<u64> = tokens.iter().map(|t| token_hash(t.as_ref())).collect();
    let unigram: Vec<u32> = raw.iter().map(|&h| view.get(ngram_key(&[h]))).collect();

    // Hash at position j, with boundary markers just outside the sentence.
    let at = |j: isize| -> u64 {
        if j == -1 {
            m.bos
        } else if j == ni {
            m.eos
        } else if j < -1 || j > ni {
            m.pad
        } else {
            raw[j as usize]
        }
    };
    // Same, with unseen tokens mapped to the OOV marker.
    let vocab = |j: isize| -> u64 {
        if (0..ni).contains(&j) && unigram[j as usize] == 0 {
            m.oov
        } else {
            at(j)
        }
    };
    let bigram = |a: isize, b: isize| view.get(ngram_key(&[at(a), at(b)]));
    let trigram = |a: isize, b: isize, c: isize| view.get(ngram_key(&[at(a), at(b), at(c)]));
    // adjacent[j] = count of the pair (j-1, j), for j in 0..=n
    let adjacent: Vec<u32> = (0..=ni).map(|j| bigram(j - 1, j)).collect();
    let adj = |j: isize| adjacent[j as usize];

    // copy_start[len-1][s]: tokens[s..s+len] == tokens[s+len..s+2len]
    let same = |a: usize, b: usize| raw[a] == raw[b] && tokens[a].as_ref() == tokens[b].as_ref();
    let copy_start: Vec<Vec<bool>> = (1..=MAX_SPAN)
        .map(|len| {
            (0..n)
                .map(|s| s + 2 * len <= n && (0..len).all(|o| same(s + o, s + len + o)))
                .collect()
        })
        .collect();

    let len_bucket = (n / 5).min(6) as u64;
    let mut all = Vec::with_capacity(n);
    for i in 0..n {
        let ii = i as isize;
        let mut f = Vec::with_capacity(96);
        f.push(feature(mask, T_BIAS, 0, 0));

        for o in -WINDOW..=WINDOW {
            f.push(feature(mask, T_ID, o as u64, vocab(ii + o)));
        }
        f.push(feature(mask, T_CONJ, 0, combine(vocab(ii - 1), vocab(ii))));
        f.push(feature(mask, T_CONJ, 1, combine(vocab(ii), vocab(ii + 1))));
        f.push(feature(
            mask,
            T_CONJ,
            2,
            combine(vocab(ii - 1), vocab(ii + 1)),
        ));

        for d in 1..=MAX_SPAN {
            if i + d < n && same(i, i + d) {
                f.push(feature(mask, T_EQ, 0, d as u64));
            }
            if i >= d && same(i, i - d) {
                f.push(feature(mask, T_EQ, 1, d as u64));
            }
            if i + d + 1 < n && same(i, i + d) && same(i + 1, i + d + 1) {
                f.push(feature(mask, T_BIGRAM_MATCH, 0, d as u64));
            }
            if i > d && same(i, i - d) && same(i - 1, i - d - 1) {
                f.push(feature(mask, T_BIGRAM_MATCH, 1, d as u64));
            }
        }

        for len in 1..=MAX_SPAN {
            let starts = &copy_start[len - 1];
            let first = (i.saturating_sub(len - 1)..=i).any(|s| starts[s]);
            let second = (i.saturating_sub(2 * len - 1)..=i.saturating_sub(len))
                .any(|s| i >= len && starts[s]);
            if first {
                f.push(feature(mask, T_COPY, 0, len as u64));
            }
            if second {
                f.push(feature(mask, T_COPY, 1, len as u64));
            }
            if first && second {
                f.push(feature(mask, T_COPY, 2, len as u64));
            }
        }

        f.push(feature(mask, T_POS, 0, i.min(4) as u64));
        f.push(feature(mask, T_POS, 1, (n - 1 - i).min(4) as u64));
        f.push(feature(mask, T_LEN, 0, len_bucket));
        f.push(feature(mask, T_FREQ, 0, count_bucket(unigram[i])));

        let lf = count_bucket(adj(ii));
        let rf = count_bucket(adj(ii + 1));
        f.push(feature(mask, T_FAM, 0, lf));
        f.push(feature(mask, T_FAM, 1, rf));
        f.push(feature(mask, T_FAM, 2, lf * 8 + rf));

        let tl = count_bucket(trigram(ii - 2, ii - 1, ii));
        let tc = count_bucket(trigram(ii - 1, ii, ii + 1));
        let tr = count_bucket(trigram(ii, ii + 1, ii + 2));
        f.push(feature(mask, T_TRI, 0, tl));
        f.push(feature(mask, T_TRI, 1, tc));
        f.push(feature(mask, T_TRI, 2, tr));
        f.push(feature(mask, T_TRI, 3, (tl * 8 + tc) * 8 + tr));

        // A bridge: the tokens around a short span containing i form a
        // familiar bigram while an edge of the span is unfamiliar.
        let mut any_bridge = false;
        for a in 1..=MAX_SPAN as isize {
            let left = ii - a;
            if left < -1 {
                break;
            }
            for b in 1..=(MAX_SPAN as isize + 1 - a) {
                let right = ii + b;
                if right > ni {
                    break;
                }
                let bc = bigram(left, right);
                if bc == 0 {
                    continue;
                }
                let lj = adj(left + 1) > 0;
                let rj = adj(right) > 0;
                if lj && rj {
                    continue;
                }
                any_bridge = true;
                let shape = (a as u64) * 8 + b as u64;
                let junction = u64::from(lj) * 2 + u64::from(rj);
                f.push(feature(mask, T_BRIDGE, shape, junction));
                f.push(feature(
                    mask,
                    T_BRIDGE,
                    64 + (a + b - 1) as u64,
                    count_bucket(bc),
                ));
                let outer_left = trigram(left - 1, left, right) > 0;
                let outer_right = trigram(left, right, right + 1) > 0;
                let tri_shape = u64::from(outer_left) * 2 + u64::from(outer_right);
                f.push(feature(mask, T_BRIDGE_TRI, shape, tri_shape * 4 + junction));
            }
        }
        if any_bridge {
            f.push(feature(mask, T_BRIDGE_ANY, lf, rf));
        }
        all.push(f);
    }
    all
}

struct TaggerFeaturizer<'a> {
    table: &'a NgramCounts,
    mask: u64,
}

impl Featurize for TaggerFeaturizer<'_> {
    type Item = TaggedSentence;

    fn instances(&self, item: &TaggedSentence, training: bool, out: &mut Vec<Instance>) {
        let own;
        let view = if training {
            own = sentence_counts(item);
            CountView::excluding(self.table, &own)
        } else {
            CountView::new(self.table)
        };
        let feats = token_features(item.tokens(), view, self.mask);
        out.extend(
            feats
                .into_iter()
                .zip(item.labels())
                .map(|(features, l)| Instance {
                    features,
                    target: l.is_d(),
                }),
        );
    }
}

pub fn corpus_fingerprint(corpus: &[TaggedSentence]) -> String {
    let mut h = Fnv::default();
    for t in corpus {
        for (tok, lab) in t.tokens().iter().zip(t.labels()) {
            h.write(tok.as_bytes());
            h.write(b"\t");
            h.write(lab.as_str().as_bytes());
            h.write(b"\n");
        }
        h.write(b"\n");
    }
    format!("{:016x}", h.finish())
}

/// Trains a tagger. With `init`, training starts from its weights and
/// extends its bigram table with the new corpus.
pub fn train(
    corpus: &[TaggedSentence],
    config: &TrainConfig,
    init: Option<&LinearTagger>,
) -> Result<LinearTagger> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if let Some(init) = init {
        if init.backend_id() != BACKEND_ID {
            return Err(Error::BackendMismatch {
                expected: BACKEND_ID.into(),
                found: init.backend_id().into(),
            });
        }
        if init.weights.bits() != config.hash_bits {
            return Err(Error::Config(format!(
                "hash_bits {} differs from the initial model's {}",
                config.hash_bits,
                init.weights.bits()
            )));
        }
    }

    let (train_split, dev_split) = training_split(corpus, config);
    // Zero epochs means no update at all, table included.
    let mut table = init.map(|m| m.stats.clone()).unwrap_or_default();
    if config.epochs > 0 || init.is_none() {
        table.merge(&build_table(&train_split));
    }

    let start = init
        .map(|m| m.weights.clone())
        .unwrap_or_else(|| Weights::zeros(config.hash_bits));
    let sgd_config = TrainConfig {
        seed: crate::hashing::derive_seed(config.seed, "sgd"),
        ..config.clone()
    };
    let featurizer = TaggerFeaturizer {
        table: &table,
        mask: start.mask(),
    };
    let (weights, report) = fit(&featurizer, &train_split, &dev_split, start, &sgd_config);
    log::info!(
        "tagger: {} epochs on {} sentences, held-out loss {:?} -> {:?}",
        report.epochs_run,
        report.train_items,
        report.dev_loss_initial,
        report.dev_loss_final
    );

    Ok(LinearTagger {
        weights,
        stats: table,
        metadata: TrainingMetadata {
            config: config.clone(),
            corpus_fingerprint: corpus_fingerprint(corpus),
            fit: report,
            init_fingerprint: init.map(LinearTagger::fingerprint),
        },
    })
}

impl LinearTagger {
    pub fn metadata(&self) -> &TrainingMetadata {
        &self.metadata
    }

    /// Hash of the parameters (weights and table).
    pub fn fingerprint(&self) -> String {
        model_io::fingerprint(&self.stats, &self.weights)
    }

    /// Per-token D scores (logits).
    pub fn scores(&self, sentence: &Sentence) -> Result<Vec<f64>> {
        if sentence.is_empty() {
            return Err(Error::EmptySentence);
        }
        let feats = token_features(
            sentence.tokens(),
            CountView::new(&self.stats),
            self.weights.mask(),
        );
        Ok(feats.iter().map(|f| self.weights.score(f)).collect())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = ModelHeader {
            backend: BACKEND_ID.into(),
            metadata: self.metadata.clone(),
        };
        model_io::encode(ModelKind::Tagger, &header, &self.stats, &self.weights)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, stats, weights): (ModelHeader, _, _) =
            model_io::decode(ModelKind::Tagger, bytes)?;
        if header.backend != BACKEND_ID {
            return Err(Error::BackendMismatch {
                expected: BACKEND_ID.into(),
                found: header.backend,
            });
        }
        Ok(LinearTagger {
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

impl SequenceTagger for LinearTagger {
    fn backend_id(&self) -> &str {
        BACKEND_ID
    }

    fn predict(&self, sentence: &Sentence) -> Result<TaggedSentence> {
        let labels = self
            .scores(sentence)?
            .into_iter()
            .map(|s| if s > 0.0 { Label::D } else { Label::O })
            .collect();
        TaggedSentence::new(sentence.clone(), labels)
    }
}
