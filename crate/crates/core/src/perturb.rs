//! Pseudo-corpus generation from fluent text.
//!
//! Three perturbations are applied at randomly chosen positions:
//! repetition of an m-token span, insertion of an m-gram sampled from a
//! reference corpus, and deletion of an m-token span. The disfluency corpus
//! uses the first two and labels every added token D. The grammaticality
//! corpus uses all three and only records whether a sentence was perturbed.
//!
//! Positions are distinct indices into the source sentence and are applied
//! from right to left, so earlier indices stay valid. Repetition and deletion
//! spans are clamped so they never reach the next chosen position.

use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Grammaticality, JudgedSentence, Label, Sentence, TaggedSentence};
use crate::error::{Error, Result};
use crate::hashing::item_rng;

pub const MAX_POSITIONS: usize = 3;
pub const MAX_SPAN: usize = 6;

/// Upper bound on plan redraws when deletions would empty a sentence.
const MAX_RESAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Repetition,
    Inserting,
    Delete,
}

const DISFLUENCY_OPS: [Op; 2] = [Op::Repetition, Op::Inserting];
const JUDGE_OPS: [Op; 3] = [Op::Repetition, Op::Inserting, Op::Delete];

/// One perturbation at one position of the source sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edit {
    pub position: usize,
    pub op: Op,
    /// Number of tokens repeated, inserted or deleted.
    pub span: usize,
    /// The inserted m-gram, for [`Op::Inserting`] only.
    pub gram: Option<Vec<String>>,
}

/// Edits sorted by ascending position.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerturbationPlan {
    pub edits: Vec<Edit>,
}

impl PerturbationPlan {
    pub fn ops(&self) -> impl Iterator<Item = Op> + '_ {
        self.edits.iter().map(|e| e.op)
    }

    fn check_bounds(&self, source_len: usize, allow_delete: bool) {
        assert!(
            (1..=MAX_POSITIONS).contains(&self.edits.len()),
            "plan has {} positions",
            self.edits.len()
        );
        for w in self.edits.windows(2) {
            assert!(w[0].position < w[1].position, "positions not distinct");
        }
        for e in &self.edits {
            assert!(
                (1..=MAX_SPAN).contains(&e.span),
                "span {} out of range",
                e.span
            );
            assert!(e.position < source_len);
            assert!(allow_delete || e.op != Op::Delete);
        }
    }
}

/// Samples contiguous m-grams from a reference corpus.
#[derive(Debug, Clone)]
pub struct NgramSampler {
    sentences: Arc<[Vec<String>]>,
    longest: usize,
    pub max_n: usize,
}

impl NgramSampler {
    pub fn new(source: &[Sentence]) -> Result<Self> {
        let sentences: Vec<Vec<String>> = source
            .iter()
            .filter(|s| !s.is_empty())
            .map(|s| s.tokens().to_vec())
            .collect();
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let longest = sentences.iter().map(Vec::len).max().unwrap_or(0);
        Ok(NgramSampler {
            sentences: sentences.into(),
            longest,
            max_n: MAX_SPAN,
        })
    }

    /// Draws a sentence uniformly, rejecting ones shorter than `m`, then a
    /// start uniformly over the valid starts. `m` is capped by the longest
    /// source sentence.
    pub fn sample<R: Rng + ?Sized>(&self, m: usize, rng: &mut R) -> Vec<String> {
        let m = m.clamp(1, self.max_n).min(self.longest);
        loop {
            let s = &self.sentences[rng.gen_range(0..self.sentences.len())];
            if s.len() < m {
                continue;
            }
            let start = rng.gen_range(0..=s.len() - m);
            return s[start..start + m].to_vec();
        }
    }
}

fn check_position(s: &Sentence, k: usize, inclusive_end: bool) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptySentence);
    }
    let ok = if inclusive_end {
        k <= s.len()
    } else {
        k < s.len()
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Position {
            position: k,
            len: s.len(),
        })
    }
}

fn repeat_in_place(tokens: &mut Vec<String>, labels: &mut Vec<Label>, k: usize, m: usize) {
    let m = m.min(tokens.len() - k);
    let copy: Vec<String> = tokens[k..k + m].to_vec();
    tokens.splice(k..k, copy);
    labels.splice(k..k, std::iter::repeat_n(Label::D, m));
}

fn insert_in_place(tokens: &mut Vec<String>, labels: &mut Vec<Label>, k: usize, gram: &[String]) {
    tokens.splice(k..k, gram.iter().cloned());
    labels.splice(k..k, std::iter::repeat_n(Label::D, gram.len()));
}

/// Repeats `s[k..k+m)` in place; the first copy is labeled D.
pub fn apply_repetition(s: &Sentence, k: usize, m: usize) -> Result<TaggedSentence> {
    check_position(s, k, false)?;
    let mut tokens = s.tokens().to_vec();
    let mut labels = vec![Label::O; tokens.len()];
    repeat_in_place(&mut tokens, &mut labels, k, m.max(1));
    TaggedSentence::new(Sentence::from_tokens_unchecked(tokens), labels)
}

/// Inserts `gram` before token `k` (`k == len` appends), labeled D.
pub fn apply_inserting(s: &Sentence, k: usize, gram: &[String]) -> Result<TaggedSentence> {
    check_position(s, k, true)?;
    if gram.is_empty() {
        return Err(Error::EmptyGram);
    }
    if let Some(bad) = gram
        .iter()
        .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
    {
        return Err(Error::InvalidToken(bad.clone()));
    }
    let mut tokens = s.tokens().to_vec();
    let mut labels = vec![Label::O; tokens.len()];
    insert_in_place(&mut tokens, &mut labels, k, gram);
    TaggedSentence::new(Sentence::from_tokens_unchecked(tokens), labels)
}

/// Deletes `s[k..k+m)` (m clamped to the sentence end). Returns `None` when
/// the result would be empty, in which case the caller draws a new plan.
pub fn apply_delete(s: &Sentence, k: usize, m: usize) -> Option<Sentence> {
    if k >= s.len() {
        return None;
    }
    let m = m.max(1).min(s.len() - k);
    if m == s.len() {
        return None;
    }
    let mut tokens = s.tokens().to_vec();
    tokens.drain(k..k + m);
    Some(Sentence::from_tokens_unchecked(tokens))
}

/// Removes D-labeled tokens. The result may be empty.
pub fn strip_d(t: &TaggedSentence) -> Sentence {
    let tokens = t
        .tokens()
        .iter()
        .zip(t.labels())
        .filter(|(_, l)| !l.is_d())
        .map(|(tok, _)| tok.clone())
        .collect();
    Sentence::from_tokens_unchecked(tokens)
}

/// Draws a plan over a sentence of `len` tokens using the given operations.
pub fn draw_plan<R: Rng + ?Sized>(
    len: usize,
    ops: &[Op],
    sampler: &NgramSampler,
    rng: &mut R,
) -> PerturbationPlan {
    assert!(len > 0, "cannot perturb an empty sentence");
    let wanted = rng.gen_range(1..=MAX_POSITIONS).min(len);
    let mut positions = sample_indices(rng, len, wanted).into_vec();
    positions.sort_unstable();

    let mut edits = Vec::with_capacity(positions.len());
    for (i, &position) in positions.iter().enumerate() {
        let op = ops[rng.gen_range(0..ops.len())];
        let m = rng.gen_range(1..=MAX_SPAN);
        let limit = positions.get(i + 1).copied().unwrap_or(len) - position;
        let edit = match op {
            Op::Inserting => {
                let gram = sampler.sample(m, rng);
                Edit {
                    position,
                    op,
                    span: gram.len(),
                    gram: Some(gram),
                }
            }
            Op::Repetition | Op::Delete => Edit {
                position,
                op,
                span: m.min(limit),
                gram: None,
            },
        };
        edits.push(edit);
    }
    PerturbationPlan { edits }
}

/// Applies a plan without deletions, producing D/O labels.
pub fn apply_plan_tagged(s: &Sentence, plan: &PerturbationPlan) -> Result<TaggedSentence> {
    if s.is_empty() {
        return Err(Error::EmptySentence);
    }
    let mut tokens = s.tokens().to_vec();
    let mut labels = vec![Label::O; tokens.len()];
    for e in plan.edits.iter().rev() {
        match e.op {
            Op::Repetition => repeat_in_place(&mut tokens, &mut labels, e.position, e.span),
            Op::Inserting => {
                let gram = e.gram.as_deref().ok_or(Error::EmptyGram)?;
                insert_in_place(&mut tokens, &mut labels, e.position, gram);
            }
            Op::Delete => {
                return Err(Error::Config("deletion has no D/O labeling".into()));
            }
        }
    }
    TaggedSentence::new(Sentence::from_tokens_unchecked(tokens), labels)
}

/// Applies a plan that may contain deletions. `None` if the result is empty.
pub fn apply_plan(s: &Sentence, plan: &PerturbationPlan) -> Option<Sentence> {
    let mut tokens = s.tokens().to_vec();
    let mut labels = vec![Label::O; tokens.len()];
    for e in plan.edits.iter().rev() {
        match e.op {
            Op::Repetition => repeat_in_place(&mut tokens, &mut labels, e.position, e.span),
            Op::Inserting => {
                insert_in_place(&mut tokens, &mut labels, e.position, e.gram.as_deref()?)
            }
            Op::Delete => {
                let m = e.span.min(tokens.len() - e.position);
                tokens.drain(e.position..e.position + m);
            }
        }
    }
    (!tokens.is_empty()).then(|| Sentence::from_tokens_unchecked(tokens))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub requested: usize,
    pub emitted: usize,
    pub tokens: usize,
    pub disfluent_tokens: usize,
    pub errors: usize,
    pub repetition_ops: usize,
    pub inserting_ops: usize,
    pub delete_ops: usize,
}

impl GenerationSummary {
    pub fn disfluent_rate(&self) -> f64 {
        if self.tokens == 0 {
            0.0
        } else {
            self.disfluent_tokens as f64 / self.tokens as f64
        }
    }

    pub fn error_rate(&self) -> f64 {
        if self.emitted == 0 {
            0.0
        } else {
            self.errors as f64 / self.emitted as f64
        }
    }

    fn count_ops(&mut self, plan: &PerturbationPlan) {
        for op in plan.ops() {
            match op {
                Op::Repetition => self.repetition_ops += 1,
                Op::Inserting => self.inserting_ops += 1,
                Op::Delete => self.delete_ops += 1,
            }
        }
    }
}

fn take_sources(fluent: &[Sentence], count: usize) -> &[Sentence] {
    if count > fluent.len() {
        log::warn!(
            "requested {count} sentences but only {} sources available",
            fluent.len()
        );
    }
    &fluent[..count.min(fluent.len())]
}

/// Disfluency pseudo-corpus together with the plan behind each sentence.
pub fn gen_disfluency_corpus_with_plans(
    fluent: &[Sentence],
    sampler: &NgramSampler,
    count: usize,
    seed: u64,
) -> Result<(Vec<(TaggedSentence, PerturbationPlan)>, GenerationSummary)> {
    let sources = take_sources(fluent, count);
    let out: Vec<(TaggedSentence, PerturbationPlan)> = sources
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            if s.is_empty() {
                return Err(Error::EmptySentence);
            }
            let mut rng = item_rng(seed, i as u64);
            let plan = draw_plan(s.len(), &DISFLUENCY_OPS, sampler, &mut rng);
            plan.check_bounds(s.len(), false);
            let tagged = apply_plan_tagged(s, &plan)?;
            Ok((tagged, plan))
        })
        .collect::<Result<_>>()?;

    let mut summary = GenerationSummary {
        requested: count,
        emitted: out.len(),
        ..Default::default()
    };
    for (t, plan) in &out {
        summary.tokens += t.len();
        summary.disfluent_tokens += t.disfluent_count();
        summary.count_ops(plan);
    }
    Ok((out, summary))
}

/// Perturbs each fluent sentence with 1–3 repetitions/insertions. Output
/// order follows input order and is independent of the thread count.
pub fn gen_disfluency_corpus(
    fluent: &[Sentence],
    sampler: &NgramSampler,
    count: usize,
    seed: u64,
) -> Result<(Vec<TaggedSentence>, GenerationSummary)> {
    let (pairs, summary) = gen_disfluency_corpus_with_plans(fluent, sampler, count, seed)?;
    Ok((pairs.into_iter().map(|(t, _)| t).collect(), summary))
}

/// Emits roughly `error_fraction` perturbed (error) sentences; the rest are
/// copied verbatim as right.
pub fn gen_judge_corpus(
    fluent: &[Sentence],
    sampler: &NgramSampler,
    count: usize,
    error_fraction: f64,
    seed: u64,
) -> Result<(Vec<JudgedSentence>, GenerationSummary)> {
    if !(0.0..=1.0).contains(&error_fraction) {
        return Err(Error::Config(format!(
            "error_fraction {error_fraction} outside [0, 1]"
        )));
    }
    let sources = take_sources(fluent, count);
    let out: Vec<(JudgedSentence, Option<PerturbationPlan>)> = sources
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            if s.is_empty() {
                return Err(Error::EmptySentence);
            }
            let mut rng = item_rng(seed, i as u64);
            if !rng.gen_bool(error_fraction) {
                return Ok((JudgedSentence::new(s.clone(), Grammaticality::Right), None));
            }
            for _ in 0..MAX_RESAMPLES {
                let plan = draw_plan(s.len(), &JUDGE_OPS, sampler, &mut rng);
                plan.check_bounds(s.len(), true);
                if let Some(err) = apply_plan(s, &plan) {
                    return Ok((JudgedSentence::new(err, Grammaticality::Error), Some(plan)));
                }
            }
            // Only reachable if every draw deleted everything; fall back to
            // a plain repetition, which is always valid.
            let plan = PerturbationPlan {
                edits: vec![Edit {
                    position: 0,
                    op: Op::Repetition,
                    span: 1,
                    gram: None,
                }],
            };
            let err = apply_plan(s, &plan).expect("repetition never empties a sentence");
            Ok((JudgedSentence::new(err, Grammaticality::Error), Some(plan)))
        })
        .collect::<Result<_>>()?;

    let mut summary = GenerationSummary {
        requested: count,
        emitted: out.len(),
        ..Default::default()
    };
    let mut corpus = Vec::with_capacity(out.len());
    for (j, plan) in out {
        summary.tokens += j.sentence.len();
        if let Some(plan) = plan {
            summary.errors += 1;
            summary.count_ops(&plan);
        }
        corpus.push(j);
    }
    Ok((corpus, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::rng_for;
    use proptest::prelude::*;
    use rand::Rng;
    use Label::{D, O};

    fn sent(s: &str) -> Sentence {
        Sentence::from_line(s)
    }

    fn toks(s: &Sentence) -> Vec<&str> {
        s.tokens().iter().map(String::as_str).collect()
    }

    fn gram(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn repetition_examples() {
        let t = apply_repetition(&sent("a b c"), 0, 2).unwrap();
        assert_eq!(toks(t.sentence()), ["a", "b", "a", "b", "c"]);
        assert_eq!(t.labels(), [D, D, O, O, O]);

        let t = apply_repetition(&sent("a"), 0, 3).unwrap();
        assert_eq!(toks(t.sentence()), ["a", "a"]);
        assert_eq!(t.labels(), [D, O]);

        assert!(apply_repetition(&Sentence::default(), 0, 1).is_err());
        assert!(apply_repetition(&sent("a b"), 2, 1).is_err());
    }

    #[test]
    fn inserting_examples() {
        let t = apply_inserting(&sent("a b c"), 1, &gram("x y")).unwrap();
        assert_eq!(toks(t.sentence()), ["a", "x", "y", "b", "c"]);
        assert_eq!(t.labels(), [O, D, D, O, O]);

        let t = apply_inserting(&sent("a"), 1, &gram("z")).unwrap();
        assert_eq!(toks(t.sentence()), ["a", "z"]);
        assert_eq!(t.labels(), [O, D]);

        assert!(matches!(
            apply_inserting(&sent("a"), 0, &[]),
            Err(Error::EmptyGram)
        ));
    }

    #[test]
    fn delete_examples() {
        assert_eq!(
            toks(&apply_delete(&sent("a b c d"), 1, 2).unwrap()),
            ["a", "d"]
        );
        assert!(apply_delete(&sent("a b"), 0, 6).is_none());
        let s = sent("a b c d e");
        for k in 0..s.len() {
            for m in 1..=6 {
                if let Some(r) = apply_delete(&s, k, m) {
                    assert_eq!(r.len(), s.len() - m.min(s.len() - k));
                }
            }
        }
    }

    #[test]
    fn strip_d_examples() {
        let t = TaggedSentence::new(sent("a b c"), vec![D, O, D]).unwrap();
        assert_eq!(toks(&strip_d(&t)), ["b"]);
        let t = TaggedSentence::fluent(sent("a b c")).unwrap();
        assert_eq!(strip_d(&t), sent("a b c"));
        let t = TaggedSentence::new(sent("a b"), vec![D, D]).unwrap();
        assert!(strip_d(&t).is_empty());
    }

    #[test]
    fn sampler_yields_contiguous_subsequences() {
        let src = vec![sent("a b c d e f g"), sent("x y"), sent("p q r s")];
        let sampler = NgramSampler::new(&src).unwrap();
        let mut rng = rng_for(3);
        for _ in 0..2000 {
            let m = rng.gen_range(1..=6);
            let g = sampler.sample(m, &mut rng);
            assert_eq!(g.len(), m);
            assert!(src
                .iter()
                .any(|s| s.tokens().windows(m).any(|w| w == g.as_slice())));
        }
        // m larger than any sentence is capped
        let short = NgramSampler::new(&[sent("a b")]).unwrap();
        assert_eq!(short.sample(6, &mut rng).len(), 2);
        assert!(NgramSampler::new(&[]).is_err());
    }

    #[test]
    fn plans_respect_bounds_and_never_overlap() {
        let sampler = NgramSampler::new(&[sent("n1 n2 n3 n4 n5 n6 n7")]).unwrap();
        let mut rng = rng_for(11);
        for len in 1..12 {
            for _ in 0..300 {
                let plan = draw_plan(len, &JUDGE_OPS, &sampler, &mut rng);
                plan.check_bounds(len, true);
                for w in plan.edits.windows(2) {
                    if w[0].op != Op::Inserting {
                        assert!(w[0].position + w[0].span <= w[1].position);
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn repetition_strips_back(tokens in prop::collection::vec("[a-e]", 1..15), k in 0usize..15, m in 1usize..7) {
            let s = Sentence::new(tokens).unwrap();
            let k = k % s.len();
            let t = apply_repetition(&s, k, m).unwrap();
            prop_assert_eq!(strip_d(&t), s);
        }

        #[test]
        fn inserting_strips_back(tokens in prop::collection::vec("[a-e]", 1..15), k in 0usize..16, g in prop::collection::vec("[a-z]", 1..7)) {
            let s = Sentence::new(tokens).unwrap();
            let k = k % (s.len() + 1);
            let t = apply_inserting(&s, k, &g).unwrap();
            prop_assert_eq!(strip_d(&t), s);
        }
    }

    fn fluent_corpus(n: usize) -> Vec<Sentence> {
        let mut rng = rng_for(5);
        (0..n)
            .map(|_| {
                let len = rng.gen_range(1..20);
                Sentence::from_tokens_unchecked(
                    (0..len)
                        .map(|_| format!("w{}", rng.gen_range(0..50)))
                        .collect(),
                )
            })
            .collect()
    }

    #[test]
    fn disfluency_corpus_reconstructs_sources() {
        let fluent = fluent_corpus(2000);
        let sampler = NgramSampler::new(&fluent).unwrap();
        let (pairs, summary) =
            gen_disfluency_corpus_with_plans(&fluent, &sampler, 2000, 9).unwrap();
        assert_eq!(summary.emitted, 2000);
        assert_eq!(summary.delete_ops, 0);
        for ((t, _), src) in pairs.iter().zip(&fluent) {
            assert_eq!(&strip_d(t), src);
            assert!(t.disfluent_count() > 0);
        }
    }

    #[test]
    fn generation_is_deterministic_and_thread_independent() {
        let fluent = fluent_corpus(500);
        let sampler = NgramSampler::new(&fluent).unwrap();
        let a = gen_disfluency_corpus(&fluent, &sampler, 500, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| gen_disfluency_corpus(&fluent, &sampler, 500, 42).unwrap());
        assert_eq!(a, b);
        let c = gen_disfluency_corpus(&fluent, &sampler, 500, 43).unwrap();
        assert_ne!(a.0, c.0);

        let j1 = gen_judge_corpus(&fluent, &sampler, 500, 0.5, 1).unwrap();
        let j2 = pool.install(|| gen_judge_corpus(&fluent, &sampler, 500, 0.5, 1).unwrap());
        assert_eq!(j1, j2);
    }

    #[test]
    fn short_input_emits_what_exists() {
        let fluent = fluent_corpus(10);
        let sampler = NgramSampler::new(&fluent).unwrap();
        let (out, summary) = gen_disfluency_corpus(&fluent, &sampler, 100, 1).unwrap();
        assert_eq!(out.len(), 10);
        assert_eq!(summary.requested, 100);
    }

    #[test]
    fn judge_corpus_rights_are_verbatim() {
        let fluent = fluent_corpus(3000);
        let sampler = NgramSampler::new(&fluent).unwrap();
        let (corpus, summary) = gen_judge_corpus(&fluent, &sampler, 3000, 0.5, 77).unwrap();
        for (j, src) in corpus.iter().zip(&fluent) {
            match j.label {
                Grammaticality::Right => assert_eq!(&j.sentence, src),
                Grammaticality::Error => assert!(!j.sentence.is_empty()),
            }
        }
        assert!(summary.repetition_ops > 0 && summary.inserting_ops > 0 && summary.delete_ops > 0);
        assert!(gen_judge_corpus(&fluent, &sampler, 10, 1.5, 1).is_err());
    }
}
