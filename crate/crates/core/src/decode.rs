//! Turning score matrices into graphs.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Arc, DepGraph};
use crate::targets::count_untransform;
use crate::vocab::Vocabulary;

/// Arc scores `s(i → j)` for `i ∈ 0..=n`, `j ∈ 1..=n`; self-arcs are `−∞`.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcScores {
    n: usize,
    /// Row `j − 1`, column `i`.
    data: Vec<f64>,
}

impl ArcScores {
    /// From an `n × (n+1)` row-major matrix whose entry `[j−1][i]` is
    /// `s(i → j)`.
    pub fn from_matrix(n: usize, matrix: &[f64]) -> Self {
        assert_eq!(matrix.len(), n * (n + 1), "arc score matrix size");
        let mut data = matrix.to_vec();
        for j in 1..=n {
            data[(j - 1) * (n + 1) + j] = f64::NEG_INFINITY;
        }
        ArcScores { n, data }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Vec::with_capacity(n * (n + 1));
        for j in 1..=n {
            for i in 0..=n {
                m.push(f(i, j));
            }
        }
        ArcScores::from_matrix(n, &m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, head: usize, dep: usize) -> f64 {
        self.data[(dep - 1) * (self.n + 1) + head]
    }
}

/// Label scores `s_l(i → j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelScores {
    n: usize,
    labels: usize,
    data: Vec<f64>,
}

impl LabelScores {
    /// From an `(n·L) × (n+1)` matrix whose entry `[(j−1)·L + l][i]` is
    /// `s_l(i → j)`.
    pub fn from_matrix(n: usize, labels: usize, matrix: &[f64]) -> Self {
        assert_eq!(matrix.len(), n * labels * (n + 1), "label score matrix size");
        LabelScores {
            n,
            labels,
            data: matrix.to_vec(),
        }
    }

    pub fn from_fn(n: usize, labels: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut m = Vec::with_capacity(n * labels * (n + 1));
        for j in 1..=n {
            for l in 0..labels {
                for i in 0..=n {
                    m.push(f(l, i, j));
                }
            }
        }
        LabelScores::from_matrix(n, labels, &m)
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn get(&self, label: usize, head: usize, dep: usize) -> f64 {
        self.data[((dep - 1) * self.labels + label) * (self.n + 1) + head]
    }

    /// Highest-scoring label for `head → dep`; ties go to the lowest id.
    pub fn argmax(&self, head: usize, dep: usize) -> usize {
        let mut best = 0;
        for l in 1..self.labels {
            if self.get(l, head, dep) > self.get(best, head, dep) {
                best = l;
            }
        }
        best
    }
}

/// How a predicted graph is read off the scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMode {
    /// Every positive-scoring arc.
    Greedy,
    /// Per-token head counts from the governor-count head.
    BudgetH,
    /// Per-token, per-label counts from the bag-of-labels head.
    BudgetB,
}

impl FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(DecodeMode::Greedy),
            "budget-h" => Ok(DecodeMode::BudgetH),
            "budget-b" => Ok(DecodeMode::BudgetB),
            _ => Err(Error::Config(format!("unknown decode mode {s:?}"))),
        }
    }
}

impl fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecodeMode::Greedy => "greedy",
            DecodeMode::BudgetH => "budget-h",
            DecodeMode::BudgetB => "budget-b",
        })
    }
}

/// A predicted arc as `(head, dep, label id)`.
pub type LabeledArc = (usize, usize, usize);

/// Every arc with a strictly positive score, labeled by argmax.
pub fn greedy_decode(arcs: &ArcScores, labels: &LabelScores) -> Vec<LabeledArc> {
    let n = arcs.len();
    let mut out = Vec::new();
    for j in 1..=n {
        for i in 0..=n {
            if i != j && arcs.get(i, j) > 0.0 {
                out.push((i, j, labels.argmax(i, j)));
            }
        }
    }
    out
}

/// How many heads, or heads per label, each token receives.
#[derive(Clone, Debug, PartialEq)]
pub enum Budgets {
    /// `k_j` for tokens `1..=n` (element `j − 1`).
    Heads(Vec<usize>),
    /// `k_jl` for tokens `1..=n`, one entry per label.
    Labels(Vec<Vec<usize>>),
}

impl Budgets {
    /// Budgets from transformed count predictions.
    pub fn heads_from_predictions(nbh: &[f64]) -> Self {
        Budgets::Heads(nbh.iter().map(|&x| count_untransform(x)).collect())
    }

    /// Budgets from an `n × L` row-major matrix of transformed counts.
    pub fn labels_from_predictions(bol: &[f64], n: usize, labels: usize) -> Self {
        Budgets::Labels(
            (0..n)
                .map(|j| {
                    bol[j * labels..(j + 1) * labels]
                        .iter()
                        .map(|&x| count_untransform(x))
                        .collect()
                })
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct BudgetDecode {
    pub arcs: Vec<LabeledArc>,
    /// Tokens whose budget exceeded the available candidates.
    pub truncated: Vec<usize>,
}

fn desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

/// Selects, per token, the arcs allowed by its budget regardless of sign.
///
/// Heads mode ranks candidate heads by arc score (ties to the lower head)
/// and labels each chosen arc by argmax. Labels mode walks all
/// `(label, head)` candidates of a token by descending label score and
/// keeps one while that label has budget left and the head is still free.
pub fn budget_decode(arcs: &ArcScores, labels: &LabelScores, budgets: &Budgets) -> Result<BudgetDecode> {
    let n = arcs.len();
    let mut out = BudgetDecode::default();
    match budgets {
        Budgets::Heads(k) => {
            if k.len() != n {
                return Err(Error::Contract(format!("{} head budgets for {n} tokens", k.len())));
            }
            for j in 1..=n {
                let mut heads: Vec<usize> = (0..=n).filter(|&i| i != j).collect();
                heads.sort_by(|&a, &b| desc(arcs.get(a, j), arcs.get(b, j)).then(a.cmp(&b)));
                let want = k[j - 1];
                if want > heads.len() {
                    out.truncated.push(j);
                }
                for &i in heads.iter().take(want) {
                    out.arcs.push((i, j, labels.argmax(i, j)));
                }
            }
        }
        Budgets::Labels(k) => {
            if k.len() != n || k.iter().any(|row| row.len() != labels.labels()) {
                return Err(Error::Contract("label budgets do not match the scores".into()));
            }
            for j in 1..=n {
                let mut remaining = k[j - 1].clone();
                let mut candidates: Vec<(usize, usize)> = (0..labels.labels())
                    .flat_map(|l| (0..=n).filter(move |&i| i != j).map(move |i| (l, i)))
                    .collect();
                candidates.sort_by(|&(la, ia), &(lb, ib)| {
                    desc(labels.get(la, ia, j), labels.get(lb, ib, j))
                        .then(ia.cmp(&ib))
                        .then(la.cmp(&lb))
                });
                let mut taken = vec![false; n + 1];
                let mut chosen = Vec::new();
                for (l, i) in candidates {
                    if remaining[l] > 0 && !taken[i] {
                        remaining[l] -= 1;
                        taken[i] = true;
                        chosen.push((i, j, l));
                    }
                }
                if remaining.iter().any(|&r| r > 0) {
                    out.truncated.push(j);
                }
                chosen.sort_unstable();
                out.arcs.extend(chosen);
            }
        }
    }
    Ok(out)
}

/// A copy of `input` carrying the decoded arcs.
pub fn to_graph(input: &DepGraph, arcs: &[LabeledArc], vocab: &Vocabulary) -> Result<DepGraph> {
    let arcs = arcs
        .iter()
        .map(|&(h, d, l)| Arc::new(h, d, vocab.labels.name(l)))
        .collect();
    input.with_arcs(arcs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_labels(n: usize) -> LabelScores {
        LabelScores::from_fn(n, 2, |l, _, _| l as f64)
    }

    #[test]
    fn zero_score_is_not_predicted() {
        let arcs = ArcScores::from_fn(2, |i, _| if i == 0 { 0.0 } else { -1.0 });
        assert!(greedy_decode(&arcs, &uniform_labels(2)).is_empty());
        let arcs = ArcScores::from_fn(2, |i, _| if i == 0 { 1e-300 } else { -1.0 });
        assert_eq!(greedy_decode(&arcs, &uniform_labels(2)), vec![(0, 1, 1), (0, 2, 1)]);
    }

    #[test]
    fn budget_overrides_sign() {
        // Token 3 of 3 with incoming scores [-0.5, -0.1, -0.9] from heads 0, 1, 2.
        let s = [-0.5, -0.1, -0.9];
        let arcs = ArcScores::from_fn(3, |i, j| if j == 3 && i < 3 { s[i] } else { -5.0 });
        let out = budget_decode(&arcs, &uniform_labels(3), &Budgets::Heads(vec![0, 0, 2])).unwrap();
        assert_eq!(out.arcs, vec![(1, 3, 1), (0, 3, 1)]);
        assert!(out.truncated.is_empty());
    }

    #[test]
    fn zero_budgets_give_empty_graph() {
        let arcs = ArcScores::from_fn(3, |_, _| 4.0);
        let labels = uniform_labels(3);
        let h = budget_decode(&arcs, &labels, &Budgets::Heads(vec![0; 3])).unwrap();
        assert!(h.arcs.is_empty());
        let b = budget_decode(&arcs, &labels, &Budgets::Labels(vec![vec![0, 0]; 3])).unwrap();
        assert!(b.arcs.is_empty());
    }

    #[test]
    fn oversized_budget_is_truncated() {
        let arcs = ArcScores::from_fn(2, |_, _| 1.0);
        let out = budget_decode(&arcs, &uniform_labels(2), &Budgets::Heads(vec![5, 1])).unwrap();
        assert_eq!(out.truncated, vec![1]);
        assert_eq!(out.arcs.len(), 3);
    }

    #[test]
    fn label_budgets_never_reuse_a_head() {
        // Both labels prefer head 0; label 1 must fall back to head 2.
        let labels = LabelScores::from_fn(2, 2, |l, i, _| match (l, i) {
            (0, 0) => 5.0,
            (1, 0) => 4.0,
            (1, 2) => 1.0,
            _ => -1.0,
        });
        let arcs = ArcScores::from_fn(2, |_, _| 0.0);
        let out = budget_decode(&arcs, &labels, &Budgets::Labels(vec![vec![1, 1], vec![0, 0]])).unwrap();
        assert_eq!(out.arcs, vec![(0, 1, 0), (2, 1, 1)]);
    }

    #[test]
    fn diagonal_is_masked() {
        let arcs = ArcScores::from_fn(2, |_, _| 3.0);
        assert_eq!(arcs.get(1, 1), f64::NEG_INFINITY);
        assert_eq!(arcs.get(0, 1), 3.0);
    }
}
