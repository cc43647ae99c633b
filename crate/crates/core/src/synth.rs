//! Synthetic text for desk-scale experiments.
//!
//! `News` is a small phrase-structure grammar producing well-formed
//! written-style sentences. `Speech` produces conversational fragments
//! heavy in discourse markers and hedges; it shares pronouns and a few
//! function words with `News` but is otherwise its own n-gram source, which
//! makes it useful for simulating a domain shift in inserted material.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Sentence;
use crate::hashing::item_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Style {
    News,
    Speech,
}

impl FromStr for Style {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "news" => Ok(Style::News),
            "speech" => Ok(Style::Speech),
            other => Err(format!("unknown style {other:?} (expected news or speech)")),
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Style::News => "news",
            Style::Speech => "speech",
        })
    }
}

const DET: &[&str] = &[
    "the", "a", "this", "that", "every", "one", "another", "our", "their", "some",
];
const DET_PL: &[&str] = &[
    "the", "some", "many", "these", "those", "our", "their", "several", "few", "two", "three",
];
const ADJ: &[&str] = &[
    "new", "local", "large", "small", "public", "national", "early", "final", "major", "recent",
    "strong", "private", "foreign", "annual", "federal", "similar", "rural", "modern", "global",
    "key", "senior", "regional", "quiet", "busy", "rapid", "weak", "formal", "direct", "stable",
    "complex",
];
const NOUN: &[&str] = &[
    "company",
    "government",
    "report",
    "city",
    "market",
    "plan",
    "council",
    "school",
    "family",
    "project",
    "budget",
    "station",
    "court",
    "program",
    "bank",
    "official",
    "team",
    "agency",
    "river",
    "bridge",
    "hospital",
    "factory",
    "village",
    "minister",
    "region",
    "museum",
    "committee",
    "election",
    "harbor",
    "airport",
    "festival",
    "union",
    "firm",
    "board",
    "province",
    "network",
    "railway",
    "library",
    "office",
    "district",
];
const NOUN_PL: &[&str] = &[
    "workers",
    "prices",
    "residents",
    "farmers",
    "students",
    "officials",
    "sales",
    "talks",
    "shares",
    "voters",
    "teachers",
    "doctors",
    "engineers",
    "exports",
    "wages",
    "roads",
    "taxes",
    "leaders",
    "visitors",
    "reforms",
    "costs",
    "rules",
    "troops",
    "firms",
    "schools",
];
const NAME: &[&str] = &[
    "smith", "garcia", "chen", "muller", "okafor", "rossi", "tanaka", "novak", "silva", "dubois",
    "berlin", "lagos", "denver", "madrid", "osaka", "quebec",
];
const VERB_T: &[&str] = &[
    "approved",
    "announced",
    "rejected",
    "opened",
    "closed",
    "reviewed",
    "expanded",
    "reported",
    "supported",
    "delayed",
    "signed",
    "launched",
    "proposed",
    "funded",
    "criticized",
    "visited",
    "acquired",
    "built",
    "replaced",
    "ordered",
    "cut",
    "raised",
    "won",
    "lost",
];
const VERB_I: &[&str] = &[
    "declined",
    "increased",
    "collapsed",
    "resigned",
    "recovered",
    "rose",
    "fell",
    "grew",
    "agreed",
    "protested",
    "waited",
    "returned",
];
const VERB_S: &[&str] = &[
    "said",
    "added",
    "noted",
    "argued",
    "warned",
    "confirmed",
    "claimed",
];
const AUX: &[&str] = &["will", "could", "would", "may", "must", "should"];
const VERB_BASE: &[&str] = &[
    "approve", "announce", "reject", "open", "close", "review", "expand", "support", "delay",
    "sign", "launch", "fund", "build", "replace", "raise", "cut",
];
const PREP: &[&str] = &[
    "in", "on", "at", "for", "with", "from", "after", "before", "during", "near", "across",
    "under", "over", "without",
];
const ADV: &[&str] = &[
    "quickly", "sharply", "slowly", "again", "later", "recently", "finally", "quietly", "already",
    "largely",
];
const TIME: &[&str] = &[
    "monday",
    "tuesday",
    "wednesday",
    "thursday",
    "friday",
    "yesterday",
    "today",
    "last week",
    "this year",
    "last month",
    "in march",
    "in june",
    "in october",
    "next year",
];
const CONJ: &[&str] = &["and", "but", "while", "because", "although", "after", "as"];

// Conversational material.
const PRON: &[&str] = &["i", "we", "you", "they", "he", "she", "it"];
const MARKER: &[&str] = &[
    "well",
    "so",
    "like",
    "actually",
    "basically",
    "you_know",
    "i_mean",
    "okay",
    "right",
    "oh",
    "anyway",
    "honestly",
    "yeah",
    "see",
    "now",
];
const HEDGE: &[&str] = &[
    "kind of",
    "sort of",
    "i think",
    "i guess",
    "i suppose",
    "more or less",
    "pretty much",
    "or something",
    "and stuff",
    "or whatever",
    "at least",
    "let me see",
];
const SPEECH_VERB: &[&str] = &[
    "think", "guess", "mean", "know", "said", "told", "figured", "wonder", "remember", "feel",
    "bet", "suppose", "like", "want", "got",
];
const SPEECH_WORD: &[&str] = &[
    "really", "just", "stuff", "thing", "things", "lot", "pretty", "much", "maybe", "probably",
    "totally", "gonna", "wanna", "kinda", "sure", "yes", "no", "there", "here", "that", "it",
    "about", "all", "too", "little", "bit", "way", "guys", "whole", "deal",
];

/// Skewed pick: low indices are more frequent, like a word-frequency curve.
fn pick<'a, R: Rng + ?Sized>(rng: &mut R, words: &[&'a str]) -> &'a str {
    let u: f64 = rng.gen();
    words[((u * u) * words.len() as f64) as usize]
}

fn push(out: &mut Vec<String>, phrase: &str) {
    out.extend(phrase.split_whitespace().map(str::to_string));
}

fn noun_phrase<R: Rng + ?Sized>(rng: &mut R, out: &mut Vec<String>, depth: usize) {
    match rng.gen_range(0..10) {
        0 => push(out, pick(rng, NAME)),
        1..=3 => {
            push(out, pick(rng, DET_PL));
            if rng.gen_bool(0.4) {
                push(out, pick(rng, ADJ));
            }
            push(out, pick(rng, NOUN_PL));
        }
        _ => {
            push(out, pick(rng, DET));
            if rng.gen_bool(0.45) {
                push(out, pick(rng, ADJ));
            }
            push(out, pick(rng, NOUN));
        }
    }
    if depth == 0 && rng.gen_bool(0.2) {
        push(out, ["of", "for", "in"].choose(rng).unwrap());
        noun_phrase(rng, out, depth + 1);
    }
}

fn verb_phrase<R: Rng + ?Sized>(rng: &mut R, out: &mut Vec<String>, depth: usize) {
    match rng.gen_range(0..10) {
        0..=4 => {
            push(out, pick(rng, VERB_T));
            noun_phrase(rng, out, depth);
        }
        5..=6 => {
            push(out, pick(rng, AUX));
            push(out, pick(rng, VERB_BASE));
            noun_phrase(rng, out, depth);
        }
        7..=8 => {
            push(out, pick(rng, VERB_I));
            if rng.gen_bool(0.5) {
                push(out, pick(rng, ADV));
            }
        }
        _ => {
            push(out, pick(rng, VERB_S));
            if depth == 0 {
                push(out, "that");
                clause(rng, out, depth + 1);
            } else {
                push(out, pick(rng, TIME));
            }
        }
    }
    if rng.gen_bool(0.35) {
        push(out, pick(rng, PREP));
        noun_phrase(rng, out, 1);
    }
    if rng.gen_bool(0.2) {
        push(out, pick(rng, TIME));
    }
}

fn clause<R: Rng + ?Sized>(rng: &mut R, out: &mut Vec<String>, depth: usize) {
    noun_phrase(rng, out, depth);
    verb_phrase(rng, out, depth);
}

fn news<R: Rng + ?Sized>(rng: &mut R) -> Vec<String> {
    let mut out = Vec::new();
    if rng.gen_bool(0.15) {
        push(&mut out, pick(rng, TIME));
    }
    clause(rng, &mut out, 0);
    if rng.gen_bool(0.25) {
        push(&mut out, pick(rng, CONJ));
        clause(rng, &mut out, 1);
    }
    out
}

fn speech<R: Rng + ?Sized>(rng: &mut R) -> Vec<String> {
    let mut out = Vec::new();
    let parts = rng.gen_range(2..=5);
    for _ in 0..parts {
        match rng.gen_range(0..6) {
            0 | 1 => push(&mut out, pick(rng, MARKER)),
            2 => push(&mut out, pick(rng, HEDGE)),
            3 => {
                push(&mut out, pick(rng, PRON));
                push(&mut out, pick(rng, SPEECH_VERB));
            }
            _ => {
                for _ in 0..rng.gen_range(1..=3) {
                    push(&mut out, pick(rng, SPEECH_WORD));
                }
            }
        }
    }
    out
}

/// `count` sentences of the given style. Sentence `i` depends only on
/// `(seed, i)`.
pub fn generate(style: Style, count: usize, seed: u64) -> Vec<Sentence> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = item_rng(seed, i as u64);
            let tokens = match style {
                Style::News => news(&mut rng),
                Style::Speech => speech(&mut rng),
            };
            Sentence::new(tokens).expect("grammar emits non-empty, space-free tokens")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn deterministic_and_prefix_stable() {
        let a = generate(Style::News, 200, 3);
        assert_eq!(a, generate(Style::News, 200, 3));
        assert_eq!(a[..50], generate(Style::News, 50, 3)[..]);
        assert_ne!(a, generate(Style::News, 200, 4));
    }

    #[test]
    fn styles_differ_in_vocabulary() {
        let vocab = |s: Style| -> HashSet<String> {
            generate(s, 2000, 1)
                .into_iter()
                .flat_map(Sentence::into_tokens)
                .collect()
        };
        let news = vocab(Style::News);
        let speech = vocab(Style::Speech);
        assert!(news.len() > 200, "{}", news.len());
        let shared = news.intersection(&speech).count();
        assert!(shared * 4 < speech.len(), "{shared} of {}", speech.len());
    }

    #[test]
    fn sentence_lengths_are_plausible() {
        let s = generate(Style::News, 2000, 9);
        let mean = s.iter().map(Sentence::len).sum::<usize>() as f64 / s.len() as f64;
        assert!((6.0..20.0).contains(&mean), "{mean}");
        assert!(s.iter().all(|x| x.len() >= 2));
    }
}
