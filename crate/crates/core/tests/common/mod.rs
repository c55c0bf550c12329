#![allow(dead_code)]

pub mod oracle;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdp_parser::config::{ModelConfig, StackPropConfig, TaskSet};
use sdp_parser::graph::{Arc, DepGraph, Token};

pub const FORMS: &[&str] = &["the", "dog", "saw", "a", "cat", "and", "ran", "."];
pub const LABELS: &[&str] = &["ARG1", "ARG2", "BV", "ROOT", "mwe"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random graph with `1..=max_n` tokens; every ordered pair gets an arc
/// with probability `density`.
pub fn random_graph(rng: &mut ChaCha8Rng, max_n: usize, density: f64) -> DepGraph {
    let n = rng.gen_range(1..=max_n);
    let tokens: Vec<Token> = (1..=n)
        .map(|i| {
            let f = FORMS[rng.gen_range(0..FORMS.len())];
            Token::new(i, f)
                .with_lemma(f)
                .with_pos(if i % 2 == 0 { "N" } else { "V" })
        })
        .collect();
    let mut arcs = Vec::new();
    for dep in 1..=n {
        for head in 0..=n {
            if head != dep && rng.gen_bool(density) {
                arcs.push(Arc::new(head, dep, LABELS[rng.gen_range(0..LABELS.len())]));
            }
        }
    }
    DepGraph::new(tokens, arcs).unwrap()
}

pub fn random_corpus(seed: u64, count: usize, max_n: usize) -> Vec<DepGraph> {
    let mut r = rng(seed);
    (0..count).map(|_| random_graph(&mut r, max_n, 0.3)).collect()
}

/// Tiny dimensions with dropout off, for gradient and identity checks.
pub fn tiny_config(tasks: TaskSet) -> ModelConfig {
    let mut c = ModelConfig::default();
    c.encoder.word_dim = 4;
    c.encoder.lstm_hidden = 3;
    c.encoder.lstm_layers = 1;
    c.encoder.lstm_dropout = 0.0;
    c.encoder.lexical_drop = 0.0;
    c.scorer.arc_mlp = 4;
    c.scorer.label_mlp = 4;
    c.scorer.aux_hidden = 4;
    c.scorer.mlp_dropout = 0.0;
    c.scorer.aux_dropout = 0.0;
    c.tasks = tasks;
    c.stackprop = StackPropConfig {
        h: false,
        b: false,
        c_h: 1.0,
        c_b: 1.0,
    };
    c
}

/// Settings that let a small model memorize a few dozen sentences quickly.
pub const OVERFIT_CONFIG: &str = "\
word_dim=32
lstm_hidden=32
lstm_layers=1
arc_mlp=32
label_mlp=32
aux_hidden=32
lstm_dropout=0
mlp_dropout=0
aux_dropout=0
lexical_drop=0
learning_rate=0.005
patience=0
target_lf=100
";

/// Per token: governors, dependents, joined sorted incoming labels, and
/// incoming label counts, by scanning every arc.
pub fn brute_force_aux(g: &DepGraph) -> Vec<(usize, usize, String, BTreeMap<String, usize>)> {
    let mut out = Vec::new();
    for j in 1..=g.len() {
        let mut nbh = 0;
        let mut nbd = 0;
        let mut labels = Vec::new();
        let mut bag = BTreeMap::new();
        for a in g.arcs() {
            if a.dep == j {
                nbh += 1;
                labels.push(a.label.clone());
                *bag.entry(a.label.clone()).or_insert(0) += 1;
            }
            if a.head == j {
                nbd += 1;
            }
        }
        labels.sort();
        out.push((nbh, nbd, labels.join("+"), bag));
    }
    out
}
