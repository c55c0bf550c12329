mod common;

use rand::Rng;
use sdp_parser::decode::{budget_decode, greedy_decode, ArcScores, Budgets, LabelScores};
use sdp_parser::targets::count_transform;

use common::oracle::{greedy_oracle, heads_oracle, labels_oracle, random_instance};

fn sorted<T: Ord + Clone>(v: &[T]) -> Vec<T> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v
}

#[test]
fn greedy_matches_exhaustive_search() {
    let mut r = common::rng(100);
    for _ in 0..1000 {
        let labels = r.gen_range(1..=4);
        let (arcs, lab) = random_instance(&mut r, 5, labels);
        assert_eq!(sorted(&greedy_decode(&arcs, &lab)), greedy_oracle(&arcs, &lab));
    }
}

#[test]
fn head_budgets_match_exhaustive_search() {
    let mut r = common::rng(101);
    for _ in 0..1000 {
        let labels = r.gen_range(1..=4);
        let (arcs, lab) = random_instance(&mut r, 5, labels);
        let k: Vec<usize> = (0..arcs.len()).map(|_| r.gen_range(0..=arcs.len() + 1)).collect();
        let got = budget_decode(&arcs, &lab, &Budgets::Heads(k.clone())).unwrap();
        let (arcs_o, trunc_o) = heads_oracle(&arcs, &lab, &k);
        assert_eq!(sorted(&got.arcs), arcs_o);
        assert_eq!(got.truncated, trunc_o);
    }
}

#[test]
fn label_budgets_match_exhaustive_search() {
    let mut r = common::rng(102);
    for _ in 0..1000 {
        let labels = r.gen_range(1..=3);
        let (arcs, lab) = random_instance(&mut r, 5, labels);
        let k: Vec<Vec<usize>> = (0..arcs.len())
            .map(|_| (0..labels).map(|_| r.gen_range(0..=2)).collect())
            .collect();
        let got = budget_decode(&arcs, &lab, &Budgets::Labels(k.clone())).unwrap();
        let (arcs_o, trunc_o) = labels_oracle(&lab, &k);
        assert_eq!(sorted(&got.arcs), arcs_o);
        assert_eq!(got.truncated, trunc_o);
    }
}

#[test]
fn each_budget_arc_has_one_label_per_head() {
    let mut r = common::rng(103);
    for _ in 0..200 {
        let (arcs, lab) = random_instance(&mut r, 5, 3);
        let k: Vec<Vec<usize>> = (0..arcs.len()).map(|_| vec![2, 2, 2]).collect();
        let got = budget_decode(&arcs, &lab, &Budgets::Labels(k)).unwrap();
        let pairs: Vec<(usize, usize)> = got.arcs.iter().map(|&(h, d, _)| (h, d)).collect();
        let mut unique = pairs.clone();
        unique.dedup();
        assert_eq!(sorted(&pairs), sorted(&unique));
        assert!(got.arcs.iter().all(|&(h, d, _)| h != d));
    }
}

#[test]
fn budget_overrides_negative_scores() {
    let s = [-0.5, -0.1, -0.9];
    let arcs = ArcScores::from_fn(3, |i, j| if j == 3 && i < 3 { s[i] } else { -5.0 });
    let lab = LabelScores::from_fn(3, 2, |l, _, _| l as f64);
    let out = budget_decode(&arcs, &lab, &Budgets::Heads(vec![0, 0, 2])).unwrap();
    assert_eq!(sorted(&out.arcs), vec![(0, 3, 1), (1, 3, 1)]);
}

#[test]
fn zero_budgets_and_negative_scores_give_empty_graphs() {
    let arcs = ArcScores::from_fn(4, |_, _| -0.01);
    let lab = LabelScores::from_fn(4, 2, |_, _, _| 0.0);
    assert!(greedy_decode(&arcs, &lab).is_empty());
    let arcs = ArcScores::from_fn(4, |_, _| 3.0);
    assert!(budget_decode(&arcs, &lab, &Budgets::Heads(vec![0; 4]))
        .unwrap()
        .arcs
        .is_empty());
    assert!(budget_decode(&arcs, &lab, &Budgets::Labels(vec![vec![0, 0]; 4]))
        .unwrap()
        .arcs
        .is_empty());
}

#[test]
fn predicted_budgets_round_to_counts() {
    let nbh = [count_transform(2) + 0.1, -0.4, count_transform(1) - 0.2];
    let Budgets::Heads(k) = Budgets::heads_from_predictions(&nbh) else {
        unreachable!()
    };
    assert_eq!(k, vec![2, 0, 1]);
    let bol = [count_transform(1), 0.2, 0.0, count_transform(3)];
    let Budgets::Labels(k) = Budgets::labels_from_predictions(&bol, 2, 2) else {
        unreachable!()
    };
    assert_eq!(k, vec![vec![1, 0], vec![0, 3]]);
}
