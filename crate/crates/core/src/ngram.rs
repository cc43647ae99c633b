//! Hashed n-gram count tables. Both reference backends keep one of these
//! alongside their weights to tell familiar word sequences from unfamiliar
//! ones.

use std::collections::HashMap;

use crate::hashing::{combine, token_hash};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const PAD: &str = "<pad>";
pub const OOV: &str = "<oov>";

pub fn ngram_key(hashes: &[u64]) -> u64 {
    hashes
        .iter()
        .fold(hashes.len() as u64, |acc, &h| combine(acc, h))
}

/// Token hashes with one `<s>` before and one `</s>` after.
pub fn bounded_hashes<S: AsRef<str>>(tokens: &[S]) -> Vec<u64> {
    let mut out = Vec::with_capacity(tokens.len() + 2);
    out.push(token_hash(BOS));
    out.extend(tokens.iter().map(|t| token_hash(t.as_ref())));
    out.push(token_hash(EOS));
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NgramCounts {
    counts: HashMap<u64, u32>,
}

impl NgramCounts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Counts every n-gram of the given orders over `hashes`.
    pub fn add(&mut self, hashes: &[u64], orders: std::ops::RangeInclusive<usize>) {
        for n in orders {
            if n == 0 || hashes.len() < n {
                continue;
            }
            for w in hashes.windows(n) {
                let c = self.counts.entry(ngram_key(w)).or_insert(0);
                *c = c.saturating_add(1);
            }
        }
    }

    pub fn add_key(&mut self, key: u64, count: u32) {
        let c = self.counts.entry(key).or_insert(0);
        *c = c.saturating_add(count);
    }

    pub fn merge(&mut self, other: &NgramCounts) {
        for (&k, &c) in &other.counts {
            self.add_key(k, c);
        }
    }

    pub fn get(&self, key: u64) -> u32 {
        self.counts.get(&key).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Entries sorted by key, for deterministic serialization.
    pub fn sorted_entries(&self) -> Vec<(u64, u32)> {
        let mut v: Vec<(u64, u32)> = self.counts.iter().map(|(&k, &c)| (k, c)).collect();
        v.sort_unstable();
        v
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (u64, u32)>) -> Self {
        NgramCounts {
            counts: entries.into_iter().collect(),
        }
    }
}

/// A table with an optional sentence's own contribution subtracted, so a
/// training sentence is featurized as if it had been held out.
#[derive(Debug, Clone, Copy)]
pub struct CountView<'a> {
    table: &'a NgramCounts,
    own: Option<&'a NgramCounts>,
}

impl<'a> CountView<'a> {
    pub fn new(table: &'a NgramCounts) -> Self {
        CountView { table, own: None }
    }

    pub fn excluding(table: &'a NgramCounts, own: &'a NgramCounts) -> Self {
        CountView {
            table,
            own: Some(own),
        }
    }

    pub fn get(&self, key: u64) -> u32 {
        let c = self.table.get(key);
        match self.own {
            Some(own) => c.saturating_sub(own.get(key)),
            None => c,
        }
    }

    pub fn get_ngram(&self, hashes: &[u64]) -> u32 {
        self.get(ngram_key(hashes))
    }
}

/// Coarse log-scale bucket for counts: 0, 1, 2–3, 4–15, 16+.
pub fn count_bucket(c: u32) -> u64 {
    match c {
        0 => 0,
        1 => 1,
        2..=3 => 2,
        4..=15 => 3,
        _ => 4,
    }
}
