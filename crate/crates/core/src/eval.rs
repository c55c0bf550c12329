//! Corpus-level scores of predicted graphs against gold graphs.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{validate, DepGraph, ValidateConfig, ViolationCounts};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

impl Prf {
    /// Percentages from counts; every ratio with a zero denominator is 0.
    pub fn from_counts(correct: usize, predicted: usize, gold: usize) -> Self {
        let pct = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
        let precision = pct(correct, predicted);
        let recall = pct(correct, gold);
        let f = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Prf { precision, recall, f }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ArcCounts {
    pub gold: usize,
    pub predicted: usize,
    pub correct: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub sentences: usize,
    pub labeled: Prf,
    pub unlabeled: Prf,
    pub labeled_counts: ArcCounts,
    pub unlabeled_counts: ArcCounts,
    pub head_count_accuracy: f64,
    pub violations: ViolationCounts,
    pub per_label: BTreeMap<String, Prf>,
}

fn check_aligned(gold: &[DepGraph], pred: &[DepGraph]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::Data(format!(
            "{} gold sentences but {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    for (k, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Data(format!(
                "sentence {}: {} gold tokens but {} predicted",
                k + 1,
                g.len(),
                p.len()
            )));
        }
    }
    Ok(())
}

/// Percentage of tokens whose predicted number of governors is the gold one.
pub fn head_count_accuracy(gold: &[DepGraph], pred: &[DepGraph]) -> Result<f64> {
    check_aligned(gold, pred)?;
    let (mut right, mut total) = (0usize, 0usize);
    for (g, p) in gold.iter().zip(pred) {
        let (gd, pd) = (g.in_degrees(), p.in_degrees());
        right += (1..=g.len()).filter(|&j| gd[j] == pd[j]).count();
        total += g.len();
    }
    Ok(if total == 0 {
        0.0
    } else {
        100.0 * right as f64 / total as f64
    })
}

/// Micro-averaged labeled and unlabeled scores, root arcs included.
pub fn labeled_f(gold: &[DepGraph], pred: &[DepGraph], audit: &ValidateConfig) -> Result<EvalReport> {
    check_aligned(gold, pred)?;
    let mut lab = ArcCounts::default();
    let mut unl = ArcCounts::default();
    let mut per_label: BTreeMap<String, ArcCounts> = BTreeMap::new();
    let mut violations = ViolationCounts::default();
    for (g, p) in gold.iter().zip(pred) {
        let g_lab: HashSet<(usize, usize, &str)> = g.arcs().iter().map(|a| (a.head, a.dep, a.label.as_str())).collect();
        let p_lab: HashSet<(usize, usize, &str)> = p.arcs().iter().map(|a| (a.head, a.dep, a.label.as_str())).collect();
        let g_unl: HashSet<(usize, usize)> = g_lab.iter().map(|&(h, d, _)| (h, d)).collect();
        let p_unl: HashSet<(usize, usize)> = p_lab.iter().map(|&(h, d, _)| (h, d)).collect();
        lab.gold += g_lab.len();
        lab.predicted += p_lab.len();
        lab.correct += g_lab.intersection(&p_lab).count();
        unl.gold += g_unl.len();
        unl.predicted += p_unl.len();
        unl.correct += g_unl.intersection(&p_unl).count();
        for &(h, d, l) in &g_lab {
            let c = per_label.entry(l.to_string()).or_default();
            c.gold += 1;
            c.correct += p_lab.contains(&(h, d, l)) as usize;
        }
        for &(_, _, l) in &p_lab {
            per_label.entry(l.to_string()).or_default().predicted += 1;
        }
        for v in validate(p, audit) {
            violations.add(&v);
        }
    }
    Ok(EvalReport {
        sentences: gold.len(),
        labeled: Prf::from_counts(lab.correct, lab.predicted, lab.gold),
        unlabeled: Prf::from_counts(unl.correct, unl.predicted, unl.gold),
        labeled_counts: lab,
        unlabeled_counts: unl,
        head_count_accuracy: head_count_accuracy(gold, pred)?,
        violations,
        per_label: per_label
            .into_iter()
            .map(|(l, c)| (l, Prf::from_counts(c.correct, c.predicted, c.gold)))
            .collect(),
    })
}

impl EvalReport {
    /// One `key=value` line per metric; per-label lines follow.
    pub fn key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "LP={:.2} LR={:.2} LF={:.2}",
            self.labeled.precision, self.labeled.recall, self.labeled.f
        );
        let _ = writeln!(
            s,
            "UP={:.2} UR={:.2} UF={:.2}",
            self.unlabeled.precision, self.unlabeled.recall, self.unlabeled.f
        );
        let _ = writeln!(
            s,
            "gold_arcs={} pred_arcs={} correct_arcs={}",
            self.labeled_counts.gold, self.labeled_counts.predicted, self.labeled_counts.correct
        );
        let _ = writeln!(s, "head_count_accuracy={:.2}", self.head_count_accuracy);
        let _ = writeln!(
            s,
            "violations_exclusive={} violations_unique={} violations_duplicate={}",
            self.violations.exclusive, self.violations.unique, self.violations.duplicate
        );
        for (label, prf) in &self.per_label {
            let _ = writeln!(
                s,
                "label={label} P={:.2} R={:.2} F={:.2}",
                prf.precision, prf.recall, prf.f
            );
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn identical_graphs_score_100() {
        let g = vec![fixtures::went_back_and_spoke(), fixtures::cela_l_a_habitue()];
        let r = labeled_f(&g, &g, &ValidateConfig::default()).unwrap();
        assert_eq!(
            (r.labeled.precision, r.labeled.recall, r.labeled.f),
            (100.0, 100.0, 100.0)
        );
        assert_eq!(r.head_count_accuracy, 100.0);
    }

    #[test]
    fn hand_counted_precision_and_recall() {
        let gold = DepGraph::from_forms(
            &["a", "b", "c", "d"],
            &[(0, 1, "ROOT"), (1, 2, "X"), (1, 3, "X"), (3, 4, "Y")],
        )
        .unwrap();
        let pred = gold
            .with_arcs(vec![
                crate::graph::Arc::new(0, 1, "ROOT"),
                crate::graph::Arc::new(1, 2, "X"),
                crate::graph::Arc::new(1, 3, "Y"),
                crate::graph::Arc::new(3, 4, "Y"),
                crate::graph::Arc::new(2, 4, "Y"),
            ])
            .unwrap();
        let r = labeled_f(&[gold], &[pred], &ValidateConfig::default()).unwrap();
        assert!((r.labeled.precision - 60.0).abs() < 1e-12);
        assert!((r.labeled.recall - 75.0).abs() < 1e-12);
        assert!((r.labeled.f - 200.0 / 3.0).abs() < 1e-9);
        assert!((r.unlabeled.recall - 100.0).abs() < 1e-12);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        let g = fixtures::went_back_and_spoke();
        let empty = g.with_arcs(vec![]).unwrap();
        let r = labeled_f(
            std::slice::from_ref(&g),
            std::slice::from_ref(&empty),
            &ValidateConfig::default(),
        )
        .unwrap();
        assert_eq!(r.labeled, Prf::default());
        // "and" and "to" have no governors.
        let acc = head_count_accuracy(&[g], &[empty]).unwrap();
        assert!((acc - 200.0 / 9.0).abs() < 1e-9);
    }

    #[test]
    fn one_wrong_head_count_in_five() {
        let gold = DepGraph::from_forms(&["a", "b", "c", "d", "e"], &[(0, 1, "R"), (1, 2, "X")]).unwrap();
        let pred = gold.with_arcs(vec![crate::graph::Arc::new(0, 1, "R")]).unwrap();
        assert!((head_count_accuracy(&[gold], &[pred]).unwrap() - 80.0).abs() < 1e-12);
    }

    #[test]
    fn misaligned_corpora_are_rejected() {
        let g = fixtures::went_back_and_spoke();
        assert!(labeled_f(std::slice::from_ref(&g), &[], &ValidateConfig::default()).is_err());
        let other = fixtures::cela_l_a_habitue();
        assert!(head_count_accuracy(&[g], &[other]).is_err());
    }
}
