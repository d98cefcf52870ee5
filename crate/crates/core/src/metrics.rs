//! Evaluation: per-class binary reports, coarse hostility F1 and
//! fine-grained per-dimension F1.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{Label, LabelSet};
use crate::error::{Error, Result};

/// Precision, recall and F1 of one side of a binary problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
    /// Some ratio had a zero denominator and was reported as 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fn_: usize,
    pub fp: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_pairs(gold: &[bool], pred: &[bool]) -> Result<Confusion> {
        if gold.len() != pred.len() {
            return Err(Error::Data(format!(
                "{} gold labels but {} predictions",
                gold.len(),
                pred.len()
            )));
        }
        let mut c = Confusion::default();
        for (&g, &p) in gold.iter().zip(pred) {
            match (g, p) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.fp + self.tn
    }

    /// Swap the roles of the two classes.
    pub fn flipped(&self) -> Confusion {
        Confusion {
            tp: self.tn,
            fn_: self.fp,
            fp: self.fn_,
            tn: self.tp,
        }
    }

    /// Scores for the positive class.
    pub fn positive_scores(&self) -> ClassScores {
        let (p, p_zero) = ratio(self.tp, self.tp + self.fp);
        let (r, r_zero) = ratio(self.tp, self.tp + self.fn_);
        let f1_zero = p + r == 0.0;
        let f1 = if f1_zero { 0.0 } else { 2.0 * p * r / (p + r) };
        ClassScores {
            precision: p,
            recall: r,
            f1,
            support: self.tp + self.fn_,
            zero_division: p_zero || r_zero || f1_zero,
        }
    }
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Report for both classes, index 0 = false, 1 = true.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryReport {
    pub classes: [ClassScores; 2],
    pub accuracy: f64,
    pub confusion: Confusion,
}

impl BinaryReport {
    pub fn from_confusion(c: Confusion) -> Result<BinaryReport> {
        if c.total() == 0 {
            return Err(Error::Data("cannot report on zero samples".into()));
        }
        Ok(BinaryReport {
            classes: [c.flipped().positive_scores(), c.positive_scores()],
            accuracy: (c.tp + c.tn) as f64 / c.total() as f64,
            confusion: c,
        })
    }

    pub fn samples(&self) -> usize {
        self.confusion.total()
    }

    /// Support-weighted mean of both classes' F1.
    pub fn weighted_f1(&self) -> f64 {
        let pairs = self.classes.map(|c| (c.f1, c.support));
        support_weighted_mean(&pairs).unwrap_or(0.0)
    }
}

pub fn binary_report(gold: &[bool], pred: &[bool]) -> Result<BinaryReport> {
    BinaryReport::from_confusion(Confusion::from_pairs(gold, pred)?)
}

/// `Σ s·v / Σ s`; an error when every support is zero.
pub fn support_weighted_mean(values: &[(f64, usize)]) -> Result<f64> {
    let total: usize = values.iter().map(|(_, s)| s).sum();
    if total == 0 {
        return Err(Error::Data("all supports are zero".into()));
    }
    Ok(values.iter().map(|(v, s)| v * *s as f64).sum::<f64>() / total as f64)
}

fn check_aligned(gold: &[LabelSet], pred: &[LabelSet]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::Data(format!(
            "{} gold label sets but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    Ok(())
}

fn membership(sets: &[LabelSet], label: Label) -> Vec<bool> {
    sets.iter().map(|s| s.contains(label)).collect()
}

/// Binary report for membership of `label`, 1 = member.
pub fn label_report(gold: &[LabelSet], pred: &[LabelSet], label: Label) -> Result<BinaryReport> {
    check_aligned(gold, pred)?;
    binary_report(&membership(gold, label), &membership(pred, label))
}

/// Support-weighted F1 of hostile vs non-hostile.
pub fn coarse_f1(gold: &[LabelSet], pred: &[LabelSet]) -> Result<f64> {
    Ok(label_report(gold, pred, Label::NonHostile)?.weighted_f1())
}

/// Positive-class F1 for one hostile dimension over all given samples.
pub fn fine_f1(gold: &[LabelSet], pred: &[LabelSet], dim: Label) -> Result<f64> {
    if !dim.is_hostile() {
        return Err(Error::Data(
            "fine-grained F1 is defined for hostile dimensions only".into(),
        ));
    }
    Ok(label_report(gold, pred, dim)?.classes[1].f1)
}

/// Fine-grained F1s averaged with gold positive support as weights.
pub fn weighted_fine_f1(gold: &[LabelSet], pred: &[LabelSet]) -> Result<f64> {
    let mut pairs = Vec::with_capacity(4);
    for dim in Label::HOSTILE {
        let r = label_report(gold, pred, dim)?;
        pairs.push((r.classes[1].f1, r.classes[1].support));
    }
    support_weighted_mean(&pairs)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Every sample, as routed by the full pipeline.
    #[default]
    EndToEnd,
    /// Only gold-hostile samples.
    SecondLevel,
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "end_to_end" => Ok(Scope::EndToEnd),
            "second_level" => Ok(Scope::SecondLevel),
            other => Err(Error::Config(format!(
                "unknown scope {other:?} (expected end_to_end or second_level)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scope: Scope,
    pub samples: usize,
    pub coarse_f1: f64,
    pub fine_f1: BTreeMap<Label, f64>,
    pub weighted_fine_f1: f64,
    /// Per-label binary reports, `non_hostile` included.
    pub reports: BTreeMap<Label, BinaryReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fallback_count: Option<usize>,
}

pub fn evaluate(
    gold: &[LabelSet],
    pred: &[LabelSet],
    scope: Scope,
    fallback_count: Option<usize>,
) -> Result<EvalReport> {
    check_aligned(gold, pred)?;
    let (gold, pred): (Vec<LabelSet>, Vec<LabelSet>) = match scope {
        Scope::EndToEnd => (gold.to_vec(), pred.to_vec()),
        Scope::SecondLevel => gold
            .iter()
            .zip(pred)
            .filter(|(g, _)| g.is_hostile())
            .unzip(),
    };
    if gold.is_empty() {
        return Err(Error::Data(format!(
            "no samples to evaluate in scope {scope:?}"
        )));
    }
    let mut reports = BTreeMap::new();
    for label in Label::ALL {
        reports.insert(label, label_report(&gold, &pred, label)?);
    }
    let fine_f1 = Label::HOSTILE
        .iter()
        .map(|&l| (l, reports[&l].classes[1].f1))
        .collect();
    let weighted = Label::HOSTILE
        .iter()
        .map(|l| (reports[l].classes[1].f1, reports[l].classes[1].support))
        .collect::<Vec<_>>();
    Ok(EvalReport {
        scope,
        samples: gold.len(),
        coarse_f1: reports[&Label::NonHostile].weighted_f1(),
        fine_f1,
        weighted_fine_f1: support_weighted_mean(&weighted)?,
        reports,
        fallback_count,
    })
}

impl EvalReport {
    /// Fixed-width classification report, one row per class and side.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:>6} {:>9} {:>7} {:>8} {:>7} {:>8}",
            "Class", "Binary", "Precision", "Recall", "F1 score", "Support", "Accuracy"
        );
        let order = [
            Label::NonHostile,
            Label::Defamation,
            Label::Fake,
            Label::Hate,
            Label::Offensive,
        ];
        for label in order {
            let r = &self.reports[&label];
            for side in 0..2 {
                let c = &r.classes[side];
                let name = if side == 0 { label.file_tag() } else { "" };
                let acc = if side == 0 {
                    format!("{:.2}", r.accuracy)
                } else {
                    String::new()
                };
                let _ = writeln!(
                    out,
                    "{:<12} {:>6} {:>9.2} {:>7.2} {:>8.2} {:>7} {:>8}",
                    name, side, c.precision, c.recall, c.f1, c.support, acc
                );
            }
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<24} {:.4}", "coarse grained F1", self.coarse_f1);
        for (label, f1) in &self.fine_f1 {
            let _ = writeln!(out, "{:<24} {:.4}", format!("{} F1", label.as_str()), f1);
        }
        let _ = writeln!(
            out,
            "{:<24} {:.4}",
            "weighted fine F1", self.weighted_fine_f1
        );
        if let Some(n) = self.fallback_count {
            let _ = writeln!(out, "{:<24} {}", "fallback count", n);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sets(tags: &[&str]) -> Vec<LabelSet> {
        tags.iter()
            .map(|t| LabelSet::parse_tags(t).unwrap())
            .collect()
    }

    #[test]
    fn hand_computed_report() {
        let r = binary_report(&[true, true, false], &[true, false, false]).unwrap();
        assert_eq!(r.classes[1].precision, 1.0);
        assert_eq!(r.classes[1].recall, 0.5);
        assert!((r.classes[1].f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.classes[0].support + r.classes[1].support, 3);
    }

    #[test]
    fn perfect_predictions() {
        let g = [true, false, true, false];
        let r = binary_report(&g, &g).unwrap();
        for c in r.classes {
            assert_eq!((c.precision, c.recall, c.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn harmonic_mean_of_rounded_row() {
        let f1: f64 = 2.0 * 0.39 * 0.69 / (0.39 + 0.69);
        assert!((f1 - 0.4983).abs() < 1e-4);
        assert_eq!(format!("{f1:.2}"), "0.50");
    }

    #[test]
    fn zero_division_is_flagged() {
        let r = binary_report(&[false, false], &[false, false]).unwrap();
        assert_eq!(r.classes[1].f1, 0.0);
        assert!(r.classes[1].zero_division);
        assert!(!r.classes[0].zero_division);
        assert!(binary_report(&[true], &[true, false]).is_err());
        assert!(binary_report(&[], &[]).is_err());
    }

    #[test]
    fn coarse_examples() {
        let g = sets(&["fake", "non-hostile", "hate"]);
        assert_eq!(coarse_f1(&g, &g).unwrap(), 1.0);
        let g = sets(&["non-hostile", "non-hostile"]);
        let p = sets(&["fake", "hate"]);
        assert_eq!(coarse_f1(&g, &p).unwrap(), 0.0);
    }

    #[test]
    fn fine_examples() {
        let g = sets(&["fake", "non-hostile"]);
        assert_eq!(fine_f1(&g, &g, Label::Fake).unwrap(), 1.0);
        let swapped = sets(&["non-hostile", "fake"]);
        assert_eq!(fine_f1(&g, &swapped, Label::Fake).unwrap(), 0.0);
        assert!(fine_f1(&g, &g, Label::NonHostile).is_err());
    }

    #[test]
    fn weighted_mean_examples() {
        let v = support_weighted_mean(&[(1.0, 5), (0.0, 5), (0.0, 5), (0.0, 5)]).unwrap();
        assert_eq!(v, 0.25);
        assert_eq!(
            support_weighted_mean(&[(0.7, 0), (0.3, 9), (0.1, 0), (0.0, 0)]).unwrap(),
            0.3
        );
        assert!(support_weighted_mean(&[(0.5, 0); 4]).is_err());
    }

    #[test]
    fn second_level_scope_filters_gold_hostile() {
        let g = sets(&["hate", "non-hostile", "fake"]);
        let p = sets(&["hate", "hate", "fake"]);
        let e2e = evaluate(&g, &p, Scope::EndToEnd, None).unwrap();
        let second = evaluate(&g, &p, Scope::SecondLevel, Some(1)).unwrap();
        assert_eq!(e2e.samples, 3);
        assert_eq!(second.samples, 2);
        assert!(second.fine_f1[&Label::Hate] > e2e.fine_f1[&Label::Hate]);
        assert!(second.table().contains("fallback count"));
    }

    fn label_set() -> impl Strategy<Value = LabelSet> {
        (0u8..16).prop_map(|bits| {
            if bits == 0 {
                LabelSet::NON_HOSTILE
            } else {
                LabelSet::new(
                    Label::HOSTILE
                        .into_iter()
                        .filter(|l| bits & (1 << l.index()) != 0),
                )
                .unwrap()
            }
        })
    }

    fn pairs() -> impl Strategy<Value = Vec<(LabelSet, LabelSet)>> {
        proptest::collection::vec((label_set(), label_set()), 1..60)
    }

    proptest! {
        #[test]
        fn report_invariants(v in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..80)) {
            let (g, p): (Vec<bool>, Vec<bool>) = v.into_iter().unzip();
            let r = binary_report(&g, &p).unwrap();
            prop_assert_eq!(r.classes[0].support + r.classes[1].support, g.len());
            for c in r.classes {
                let expect = if c.precision + c.recall > 0.0 {
                    2.0 * c.precision * c.recall / (c.precision + c.recall)
                } else {
                    0.0
                };
                prop_assert!((c.f1 - expect).abs() < 1e-12);
                for x in [c.precision, c.recall, c.f1] {
                    prop_assert!((0.0..=1.0).contains(&x));
                }
            }
        }

        #[test]
        fn coarse_ignores_hostile_sublabels(v in pairs(), swap in proptest::collection::vec(label_set(), 60)) {
            let (g, p): (Vec<LabelSet>, Vec<LabelSet>) = v.into_iter().unzip();
            let remapped: Vec<LabelSet> = p
                .iter()
                .zip(&swap)
                .map(|(orig, s)| if orig.is_hostile() && s.is_hostile() { *s } else { *orig })
                .collect();
            prop_assert_eq!(coarse_f1(&g, &p).unwrap(), coarse_f1(&g, &remapped).unwrap());
        }

        #[test]
        fn weighted_fine_is_bounded(v in pairs()) {
            let (g, p): (Vec<LabelSet>, Vec<LabelSet>) = v.into_iter().unzip();
            let supported: Vec<f64> = Label::HOSTILE
                .iter()
                .filter(|&&d| g.iter().any(|s| s.contains(d)))
                .map(|&d| fine_f1(&g, &p, d).unwrap())
                .collect();
            prop_assume!(!supported.is_empty());
            let w = weighted_fine_f1(&g, &p).unwrap();
            let lo = supported.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = supported.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(w >= lo - 1e-12 && w <= hi + 1e-12);
        }
    }
}
