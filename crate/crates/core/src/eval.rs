//! Token-level precision, recall and F1 on the D label, with an optional
//! repetition / non-repetition breakdown of gold reparanda.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, TaggedSentence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        harmonic_f1(self.precision(), self.recall())
    }

    pub fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    pub fn report(&self) -> Scores {
        Scores {
            precision: self.precision(),
            recall: self.recall(),
            f1: self.f1(),
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// `2PR / (P + R)`, or 0 when `P + R == 0`. Works on fractions or
/// percentages alike.
pub fn harmonic_f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Rounds a fraction to a percentage with one decimal, e.g. 0.8964 -> 89.6.
pub fn percent(x: f64) -> f64 {
    (x * 1000.0).round() / 10.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryReports {
    pub repetition: Scores,
    pub non_repetition: Scores,
    /// Predicted D on gold O; excluded from both category reports.
    pub uncategorized_fp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub overall: Scores,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub categories: Option<CategoryReports>,
}

impl EvalReport {
    pub fn precision(&self) -> f64 {
        self.overall.precision
    }

    pub fn recall(&self) -> f64 {
        self.overall.recall
    }

    pub fn f1(&self) -> f64 {
        self.overall.f1
    }

    /// Same report with P/R/F1 as percentages rounded to one decimal, the
    /// form written to summaries.
    pub fn rendered(&self) -> EvalReport {
        let r = |s: &Scores| Scores {
            precision: percent(s.precision),
            recall: percent(s.recall),
            f1: percent(s.f1),
            ..*s
        };
        EvalReport {
            overall: r(&self.overall),
            categories: self.categories.as_ref().map(|c| CategoryReports {
                repetition: r(&c.repetition),
                non_repetition: r(&c.non_repetition),
                uncategorized_fp: c.uncategorized_fp,
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.rendered()).expect("report serializes")
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, name: &str, s: &Scores| {
            writeln!(
                f,
                "{name:<15} P {:>5.1}  R {:>5.1}  F1 {:>5.1}   (tp {} fp {} fn {})",
                percent(s.precision),
                percent(s.recall),
                percent(s.f1),
                s.tp,
                s.fp,
                s.fn_
            )
        };
        row(f, "either", &self.overall)?;
        if let Some(c) = &self.categories {
            row(f, "repetition", &c.repetition)?;
            row(f, "non-repetition", &c.non_repetition)?;
            writeln!(f, "uncategorized fp {}", c.uncategorized_fp)?;
        }
        Ok(())
    }
}

fn check_pair(index: usize, gold: &TaggedSentence, pred: &TaggedSentence) -> Result<()> {
    if gold.tokens() != pred.tokens() {
        return Err(Error::Alignment {
            index,
            message: format!(
                "token mismatch: gold {:?} vs predicted {:?}",
                gold.sentence().to_line(),
                pred.sentence().to_line()
            ),
        });
    }
    Ok(())
}

fn check_lengths(gold: usize, pred: usize) -> Result<()> {
    if gold != pred {
        return Err(Error::Alignment {
            index: gold.min(pred),
            message: format!("gold has {gold} sentences, predictions have {pred}"),
        });
    }
    Ok(())
}

fn pair_counts(gold: &[Label], pred: &[Label]) -> Counts {
    let mut c = Counts::default();
    for (g, p) in gold.iter().zip(pred) {
        match (g.is_d(), p.is_d()) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    c
}

/// Micro-averaged token scores over aligned sentence pairs.
pub fn score(gold: &[TaggedSentence], pred: &[TaggedSentence]) -> Result<EvalReport> {
    check_lengths(gold.len(), pred.len())?;
    let mut total = Counts::default();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        check_pair(i, g, p)?;
        total.add(pair_counts(g.labels(), p.labels()));
    }
    Ok(EvalReport {
        overall: total.report(),
        categories: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReparandumCategory {
    Repetition,
    NonRepetition,
    Fluent,
}

/// A maximal D span is a repetition iff the tokens right after it are an
/// exact copy of it.
pub fn categorize_reparandum(t: &TaggedSentence) -> Vec<ReparandumCategory> {
    let tokens = t.tokens();
    let labels = t.labels();
    let n = labels.len();
    let mut out = vec![ReparandumCategory::Fluent; n];
    let mut i = 0;
    while i < n {
        if !labels[i].is_d() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && labels[i].is_d() {
            i += 1;
        }
        let len = i - start;
        let repeated = i + len <= n && tokens[start..i] == tokens[i..i + len];
        let cat = if repeated {
            ReparandumCategory::Repetition
        } else {
            ReparandumCategory::NonRepetition
        };
        out[start..i].fill(cat);
    }
    out
}

/// [`score`] plus per-category reports keyed on the gold categorization.
pub fn score_by_category(gold: &[TaggedSentence], pred: &[TaggedSentence]) -> Result<EvalReport> {
    check_lengths(gold.len(), pred.len())?;
    let mut total = Counts::default();
    let mut rep = Counts::default();
    let mut non = Counts::default();
    let mut uncategorized_fp = 0;
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        check_pair(i, g, p)?;
        total.add(pair_counts(g.labels(), p.labels()));
        for (cat, pl) in categorize_reparandum(g).into_iter().zip(p.labels()) {
            let bucket = match cat {
                ReparandumCategory::Repetition => &mut rep,
                ReparandumCategory::NonRepetition => &mut non,
                ReparandumCategory::Fluent => {
                    if pl.is_d() {
                        uncategorized_fp += 1;
                    }
                    continue;
                }
            };
            if pl.is_d() {
                bucket.tp += 1;
            } else {
                bucket.fn_ += 1;
            }
        }
    }
    Ok(EvalReport {
        overall: total.report(),
        categories: Some(CategoryReports {
            repetition: rep.report(),
            non_repetition: non.report(),
            uncategorized_fp,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Sentence;
    use crate::hashing::rng_for;
    use proptest::prelude::*;
    use rand::Rng;
    use Label::{D, O};
    use ReparandumCategory as C;

    fn tagged(line: &str, labels: &[Label]) -> TaggedSentence {
        TaggedSentence::new(Sentence::from_line(line), labels.to_vec()).unwrap()
    }

    #[test]
    fn identical_prediction_is_perfect() {
        let gold = vec![
            tagged("a b a b c", &[D, D, O, O, O]),
            tagged("x y", &[O, O]),
        ];
        let r = score(&gold, &gold).unwrap();
        assert_eq!((r.precision(), r.recall(), r.f1()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn shifted_span_gives_half() {
        let gold = [tagged("a b c d e", &[O, D, D, O, O])];
        let pred = [tagged("a b c d e", &[O, O, D, D, O])];
        let r = score(&gold, &pred).unwrap();
        assert_eq!((r.overall.tp, r.overall.fp, r.overall.fn_), (1, 1, 1));
        assert_eq!((r.precision(), r.recall(), r.f1()), (0.5, 0.5, 0.5));
    }

    #[test]
    fn zero_denominators() {
        let gold = [tagged("a b", &[O, O])];
        let r = score(&gold, &gold).unwrap();
        assert_eq!((r.precision(), r.recall(), r.f1()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn reported_table_value() {
        assert_eq!(percent(harmonic_f1(0.902, 0.891)), 89.6);
        assert_eq!(percent(harmonic_f1(90.2, 89.1) / 100.0), 89.6);
    }

    #[test]
    fn misalignment_names_sentence() {
        let gold = [tagged("a b", &[O, O]), tagged("c d", &[O, O])];
        let pred = [tagged("a b", &[O, O]), tagged("c e", &[O, O])];
        match score(&gold, &pred) {
            Err(Error::Alignment { index, .. }) => assert_eq!(index, 1),
            other => panic!("{other:?}"),
        }
        assert!(score(&gold, &pred[..1]).is_err());
        assert!(score_by_category(&gold, &pred).is_err());
    }

    #[test]
    fn categories() {
        let t = tagged("a b a b c", &[D, D, O, O, O]);
        assert_eq!(
            categorize_reparandum(&t),
            [
                C::Repetition,
                C::Repetition,
                C::Fluent,
                C::Fluent,
                C::Fluent
            ]
        );
        let t = tagged("we want well in our area", &[O, O, D, O, O, O]);
        assert_eq!(categorize_reparandum(&t)[2], C::NonRepetition);
        // a span at the end has nothing after it
        let t = tagged("a b", &[O, D]);
        assert_eq!(categorize_reparandum(&t), [C::Fluent, C::NonRepetition]);
    }

    #[test]
    fn category_reports() {
        let gold = vec![
            tagged("a b a b c", &[D, D, O, O, O]),
            tagged("x q y z", &[O, D, O, O]),
        ];
        let r = score_by_category(&gold, &gold).unwrap();
        let c = r.categories.unwrap();
        assert_eq!(c.repetition.f1, 1.0);
        assert_eq!(c.non_repetition.f1, 1.0);
        assert_eq!(r.f1(), 1.0);

        // repetitions only, plus one spurious D
        let pred = vec![
            tagged("a b a b c", &[D, D, O, O, O]),
            tagged("x q y z", &[O, O, O, D]),
        ];
        let r = score_by_category(&gold, &pred).unwrap();
        let c = r.categories.unwrap();
        assert_eq!(c.repetition.f1, 1.0);
        assert_eq!(c.non_repetition.recall, 0.0);
        assert_eq!(c.uncategorized_fp, 1);
        assert_eq!(r.overall, score(&gold, &pred).unwrap().overall);
    }

    #[test]
    fn json_uses_fixed_names_and_one_decimal() {
        let gold = [tagged("a b c", &[D, O, O])];
        let pred = [tagged("a b c", &[D, D, D])];
        let json = score_by_category(&gold, &pred).unwrap().to_json();
        assert_eq!(
            json,
            r#"{"precision":33.3,"recall":100.0,"f1":50.0,"tp":1,"fp":2,"fn":0,"categories":{"repetition":{"precision":0.0,"recall":0.0,"f1":0.0,"tp":0,"fp":0,"fn":0},"non_repetition":{"precision":100.0,"recall":100.0,"f1":100.0,"tp":1,"fp":0,"fn":0},"uncategorized_fp":2}}"#
        );
    }

    fn random_pair(rng: &mut impl Rng) -> (TaggedSentence, TaggedSentence) {
        let n = rng.gen_range(1..25);
        let toks: Vec<String> = (0..n)
            .map(|_| format!("t{}", rng.gen_range(0..4)))
            .collect();
        let lab = |rng: &mut dyn rand::RngCore| -> Vec<Label> {
            (0..n)
                .map(|_| if rng.gen_bool(0.3) { D } else { O })
                .collect()
        };
        let s = Sentence::new(toks).unwrap();
        let g = lab(rng);
        let p = lab(rng);
        (
            TaggedSentence::new(s.clone(), g).unwrap(),
            TaggedSentence::new(s, p).unwrap(),
        )
    }

    proptest! {
        #[test]
        fn order_free_and_harmonic(seed in any::<u64>()) {
            let mut rng = rng_for(seed);
            let (gold, pred): (Vec<_>, Vec<_>) = (0..20).map(|_| random_pair(&mut rng)).unzip();
            let r = score(&gold, &pred).unwrap();
            let mut g2 = gold.clone();
            let mut p2 = pred.clone();
            g2.reverse();
            p2.reverse();
            prop_assert_eq!(score(&g2, &p2).unwrap(), r);

            let (p, rc) = (r.precision(), r.recall());
            let expected = if p + rc == 0.0 { 0.0 } else { 2.0 * p * rc / (p + rc) };
            prop_assert!((r.f1() - expected).abs() < 1e-12);

            let by_cat = score_by_category(&gold, &pred).unwrap();
            prop_assert_eq!(by_cat.overall, r.overall);
            let c = by_cat.categories.unwrap();
            prop_assert_eq!(c.repetition.tp + c.non_repetition.tp, r.overall.tp);
            prop_assert_eq!(c.repetition.fn_ + c.non_repetition.fn_, r.overall.fn_);
            prop_assert_eq!(c.uncategorized_fp, r.overall.fp);
        }
    }
}
