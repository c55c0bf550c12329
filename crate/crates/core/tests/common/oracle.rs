//! Exhaustive reference decoders for small instances.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sdp_parser::decode::{ArcScores, LabelScores, LabeledArc};

/// Random scores; a third of instances draw from a small grid so that ties
/// and exact zeros occur.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, labels: usize) -> (ArcScores, LabelScores) {
    let n = rng.gen_range(1..=max_n);
    let grid = rng.gen_bool(1.0 / 3.0);
    let draw = |r: &mut ChaCha8Rng| {
        if grid {
            [-1.0, -0.5, 0.0, 0.5, 1.0][r.gen_range(0..5)]
        } else {
            r.gen_range(-2.0..2.0)
        }
    };
    let arc: Vec<f64> = (0..n * (n + 1)).map(|_| draw(rng)).collect();
    let lab: Vec<f64> = (0..n * labels * (n + 1)).map(|_| draw(rng)).collect();
    (
        ArcScores::from_matrix(n, &arc),
        LabelScores::from_matrix(n, labels, &lab),
    )
}

fn heads_for(n: usize, j: usize) -> Vec<usize> {
    (0..=n).filter(|&i| i != j).collect()
}

/// Highest label, lowest id on ties, by full scan.
fn best_label(labels: &LabelScores, i: usize, j: usize) -> usize {
    let mut best = 0;
    for l in 1..labels.labels() {
        if labels.get(l, i, j) > labels.get(best, i, j) {
            best = l;
        }
    }
    best
}

/// Every subset of candidate heads for `j`, as sorted head lists.
fn subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    let heads = heads_for(n, j);
    (0u32..1 << heads.len())
        .map(|mask| {
            heads
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &h)| h)
                .collect()
        })
        .collect()
}

fn total(arcs: &ArcScores, set: &[usize], j: usize) -> f64 {
    set.iter().map(|&i| arcs.get(i, j)).sum()
}

/// Among subsets maximizing the summed score, the smallest one, then the
/// lexicographically smallest head list.
fn best_subset(arcs: &ArcScores, j: usize, size: Option<usize>) -> Vec<usize> {
    let mut best: Option<Vec<usize>> = None;
    for s in subsets(arcs.len(), j) {
        if size.is_some_and(|k| s.len() != k) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => match total(arcs, &s, j).partial_cmp(&total(arcs, b, j)).unwrap() {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => (s.len(), &s) < (b.len(), b),
            },
        };
        if better {
            best = Some(s);
        }
    }
    best.unwrap()
}

/// Arc set maximizing the total score; each arc carries its best label.
pub fn greedy_oracle(arcs: &ArcScores, labels: &LabelScores) -> Vec<LabeledArc> {
    let mut out = Vec::new();
    for j in 1..=arcs.len() {
        for i in best_subset(arcs, j, None) {
            out.push((i, j, best_label(labels, i, j)));
        }
    }
    out.sort_unstable();
    out
}

/// Exactly `min(k_j, n)` heads per token with the highest total score.
pub fn heads_oracle(arcs: &ArcScores, labels: &LabelScores, k: &[usize]) -> (Vec<LabeledArc>, Vec<usize>) {
    let n = arcs.len();
    let mut out = Vec::new();
    let mut truncated = Vec::new();
    for j in 1..=n {
        if k[j - 1] > n {
            truncated.push(j);
        }
        for i in best_subset(arcs, j, Some(k[j - 1].min(n))) {
            out.push((i, j, best_label(labels, i, j)));
        }
    }
    out.sort_unstable();
    (out, truncated)
}

/// Priority of a `(label, head)` candidate: higher score first, then lower
/// head, then lower label.
fn priority(labels: &LabelScores, j: usize, a: (usize, usize), b: (usize, usize)) -> Ordering {
    labels
        .get(b.0, b.1, j)
        .partial_cmp(&labels.get(a.0, a.1, j))
        .unwrap()
        .then(a.1.cmp(&b.1))
        .then(a.0.cmp(&b.0))
}

/// Enumerates every assignment of at most one label per head that respects
/// the label budgets, and keeps the one whose candidates, listed by
/// priority, are lexicographically first (a longer list wins over its own
/// prefix).
pub fn labels_oracle(labels: &LabelScores, k: &[Vec<usize>]) -> (Vec<LabeledArc>, Vec<usize>) {
    let n = k.len();
    let count = labels.labels();
    let mut out = Vec::new();
    let mut truncated = Vec::new();
    for j in 1..=n {
        let heads = heads_for(n, j);
        let choices = (count + 1).pow(heads.len() as u32);
        let mut best: Option<Vec<(usize, usize)>> = None;
        for code in 0..choices {
            let mut c = code;
            let mut set = Vec::new();
            let mut used = vec![0usize; count];
            for &h in &heads {
                let pick = c % (count + 1);
                c /= count + 1;
                if pick > 0 {
                    set.push((pick - 1, h));
                    used[pick - 1] += 1;
                }
            }
            if used.iter().zip(&k[j - 1]).any(|(u, cap)| u > cap) {
                continue;
            }
            set.sort_by(|&a, &b| priority(labels, j, a, b));
            let better = match &best {
                None => true,
                Some(b) => {
                    let mut verdict = set.len() > b.len();
                    for (x, y) in set.iter().zip(b) {
                        match priority(labels, j, *x, *y) {
                            Ordering::Less => {
                                verdict = true;
                                break;
                            }
                            Ordering::Greater => {
                                verdict = false;
                                break;
                            }
                            Ordering::Equal => {}
                        }
                    }
                    verdict
                }
            };
            if better {
                best = Some(set);
            }
        }
        let best = best.unwrap();
        let mut used = vec![0usize; count];
        for &(l, h) in &best {
            used[l] += 1;
            out.push((h, j, l));
        }
        if used.iter().zip(&k[j - 1]).any(|(u, cap)| u < cap) {
            truncated.push(j);
        }
    }
    out.sort_unstable();
    (out, truncated)
}
