//! Hashed binary logistic regression trained with averaged SGD.
//!
//! Shared by the reference tagger (one instance per token) and the
//! reference judge (one instance per sentence). Features are binary
//! indicators already hashed into `[0, 2^bits)`.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashing::{derive_seed, rng_for};

pub const DEFAULT_HASH_BITS: u8 = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs without held-out loss improvement before stopping; 0 disables
    /// early stopping.
    pub patience: usize,
    pub dev_fraction: f64,
    pub hash_bits: u8,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            learning_rate: 0.1,
            batch_size: 1,
            seed: 0,
            patience: 2,
            dev_fraction: 0.1,
            hash_bits: DEFAULT_HASH_BITS,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(Error::Config("dev_fraction must be in [0, 1)".into()));
        }
        if !(8..=28).contains(&self.hash_bits) {
            return Err(Error::Config("hash_bits must be in [8, 28]".into()));
        }
        Ok(())
    }
}

/// Final (averaged) weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    bits: u8,
    values: Vec<f32>,
}

impl Weights {
    pub fn zeros(bits: u8) -> Self {
        Weights {
            bits,
            values: vec![0.0; 1usize << bits],
        }
    }

    pub fn from_values(values: Vec<f32>) -> Result<Self> {
        if !values.len().is_power_of_two() {
            return Err(Error::ModelFormat(format!(
                "weight vector length {} is not a power of two",
                values.len()
            )));
        }
        Ok(Weights {
            bits: values.len().trailing_zeros() as u8,
            values,
        })
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn mask(&self) -> u64 {
        (1u64 << self.bits) - 1
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn score(&self, features: &[u32]) -> f64 {
        features
            .iter()
            .map(|&f| f64::from(self.values[f as usize]))
            .sum()
    }
}

/// One training instance: active feature indices and the positive-class
/// target.
#[derive(Debug, Clone)]
pub struct Instance {
    pub features: Vec<u32>,
    pub target: bool,
}

/// Anything that expands into training instances (a tagged sentence gives
/// one per token, a judged sentence exactly one).
pub trait Featurize: Sync {
    type Item: Sync;

    fn instances(&self, item: &Self::Item, training: bool, out: &mut Vec<Instance>);
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn log_loss(score: f64, target: bool) -> f64 {
    // log(1 + exp(-y s)) computed stably
    let z = if target { score } else { -score };
    if z > 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// Mean log loss and accuracy of `weights` over held-out items. Per-item
/// sums are combined in item order so the result does not depend on the
/// thread count.
pub fn evaluate<F: Featurize>(featurizer: &F, weights: &Weights, items: &[F::Item]) -> (f64, f64) {
    let per_item: Vec<(f64, usize, usize)> = items
        .par_iter()
        .map(|item| {
            let mut buf = Vec::new();
            featurizer.instances(item, false, &mut buf);
            buf.iter().fold((0.0, 0usize, 0usize), |(l, c, n), inst| {
                let s = weights.score(&inst.features);
                (
                    l + log_loss(s, inst.target),
                    c + usize::from((s > 0.0) == inst.target),
                    n + 1,
                )
            })
        })
        .collect();
    let (loss, correct, n) = per_item
        .into_iter()
        .fold((0.0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    if n == 0 {
        (0.0, 0.0)
    } else {
        (loss / n as f64, correct as f64 / n as f64)
    }
}

struct AveragedSgd {
    w: Vec<f64>,
    u: Vec<f64>,
    c: f64,
}

impl AveragedSgd {
    fn new(init: &Weights) -> Self {
        let w: Vec<f64> = init.values.iter().map(|&v| f64::from(v)).collect();
        AveragedSgd {
            u: vec![0.0; w.len()],
            w,
            c: 1.0,
        }
    }

    fn score(&self, features: &[u32]) -> f64 {
        features.iter().map(|&f| self.w[f as usize]).sum()
    }

    fn update(&mut self, features: &[u32], delta: f64) {
        for &f in features {
            self.w[f as usize] += delta;
            self.u[f as usize] += self.c * delta;
        }
    }

    fn tick(&mut self) {
        self.c += 1.0;
    }

    fn averaged(&self, bits: u8) -> Weights {
        let values = self
            .w
            .iter()
            .zip(&self.u)
            .map(|(&w, &u)| (w - u / self.c) as f32)
            .collect();
        Weights { bits, values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub epochs_run: usize,
    pub train_items: usize,
    pub dev_items: usize,
    pub dev_loss_initial: Option<f64>,
    pub dev_loss_final: Option<f64>,
    pub dev_accuracy: Option<f64>,
}

/// Deterministic split into (train, dev) by a seeded shuffle.
pub fn split_dev<T: Clone>(items: &[T], dev_fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut rng_for(seed));
    let n_dev = ((items.len() as f64) * dev_fraction).floor() as usize;
    let n_dev = n_dev.min(items.len().saturating_sub(1));
    let (dev_idx, train_idx) = order.split_at(n_dev);
    let mut train_idx = train_idx.to_vec();
    let mut dev_idx = dev_idx.to_vec();
    train_idx.sort_unstable();
    dev_idx.sort_unstable();
    (
        train_idx.iter().map(|&i| items[i].clone()).collect(),
        dev_idx.iter().map(|&i| items[i].clone()).collect(),
    )
}

/// The (train, held-out) split a training run with `config` uses.
pub fn training_split<T: Clone>(items: &[T], config: &TrainConfig) -> (Vec<T>, Vec<T>) {
    split_dev(
        items,
        config.dev_fraction,
        derive_seed(config.seed, "dev-split"),
    )
}

/// Averaged-SGD logistic regression. Learning rate decays as
/// `lr / (1 + epoch)`. With a held-out set, the weights with the lowest
/// held-out loss are returned.
pub fn fit<F: Featurize>(
    featurizer: &F,
    train: &[F::Item],
    dev: &[F::Item],
    init: Weights,
    config: &TrainConfig,
) -> (Weights, FitReport) {
    let bits = init.bits;
    let mut sgd = AveragedSgd::new(&init);
    let mut best = init;
    let mut report = FitReport {
        epochs_run: 0,
        train_items: train.len(),
        dev_items: dev.len(),
        dev_loss_initial: None,
        dev_loss_final: None,
        dev_accuracy: None,
    };
    let mut best_loss = if dev.is_empty() {
        None
    } else {
        let (loss, acc) = evaluate(featurizer, &best, dev);
        report.dev_loss_initial = Some(loss);
        report.dev_loss_final = Some(loss);
        report.dev_accuracy = Some(acc);
        Some(loss)
    };

    let mut rng = rng_for(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut buf = Vec::new();
    let mut pending: Vec<(usize, f64)> = Vec::new();
    let mut stale = 0;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.learning_rate / (1.0 + epoch as f64);
        let mut in_batch = 0;
        for &i in &order {
            buf.clear();
            featurizer.instances(&train[i], true, &mut buf);
            for (k, inst) in buf.iter().enumerate() {
                let p = sigmoid(sgd.score(&inst.features));
                let g = f64::from(u8::from(inst.target)) - p;
                if config.batch_size == 1 {
                    sgd.update(&inst.features, lr * g);
                    sgd.tick();
                } else {
                    pending.push((k, lr * g / config.batch_size as f64));
                    in_batch += 1;
                    if in_batch == config.batch_size {
                        for &(k, d) in &pending {
                            sgd.update(&buf[k].features, d);
                        }
                        pending.clear();
                        in_batch = 0;
                        sgd.tick();
                    }
                }
            }
            // A batch never spans sentences: indices in `pending` refer to `buf`.
            for &(k, d) in &pending {
                sgd.update(&buf[k].features, d);
            }
            if !pending.is_empty() {
                pending.clear();
                in_batch = 0;
                sgd.tick();
            }
        }
        report.epochs_run = epoch + 1;

        let current = sgd.averaged(bits);
        match best_loss {
            None => best = current,
            Some(prev) => {
                let (loss, acc) = evaluate(featurizer, &current, dev);
                log::debug!("epoch {}: dev loss {loss:.5} acc {acc:.4}", epoch + 1);
                if loss < prev {
                    best_loss = Some(loss);
                    best = current;
                    report.dev_loss_final = Some(loss);
                    report.dev_accuracy = Some(acc);
                    stale = 0;
                } else {
                    stale += 1;
                    if config.patience > 0 && stale >= config.patience {
                        break;
                    }
                }
            }
        }
    }
    (best, report)
}
