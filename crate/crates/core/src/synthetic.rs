//! A small deterministic grammar producing DM-style semantic graphs.
//!
//! Sentences contain determiners (`BV`), adjectives (`ARG1` into their
//! noun), verbs with subjects and objects, coordinated verbs sharing their
//! subject (two governors), prepositional modifiers, the fixed expression
//! "by and large" whose first two words carry `mwe` and nothing else, and a
//! disconnected final punctuation token.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Arc, DepGraph, Token, ROOT_LABEL};

const DETS: &[&str] = &["the", "a", "every"];
const ADJS: &[&str] = &["old", "red", "small", "happy", "quiet", "tall", "green", "busy"];
const NOUNS: &[&str] = &[
    "clerk", "dog", "river", "teacher", "garden", "city", "letter", "child", "farmer", "window", "song", "horse",
];
const VERBS: &[&str] = &[
    "saw", "spoke", "left", "found", "painted", "carried", "watched", "met", "heard", "built",
];
const PREPS: &[&str] = &["near", "with", "behind"];

#[derive(Default)]
struct Builder {
    tokens: Vec<Token>,
    arcs: Vec<Arc>,
}

impl Builder {
    fn push(&mut self, form: &str, pos: &str) -> usize {
        let index = self.tokens.len() + 1;
        self.tokens.push(Token::new(index, form).with_lemma(form).with_pos(pos));
        index
    }

    fn arc(&mut self, head: usize, dep: usize, label: &str) {
        self.arcs.push(Arc::new(head, dep, label));
    }

    /// `[det] adj* noun`; returns the noun.
    fn noun_phrase(&mut self, rng: &mut ChaCha8Rng) -> usize {
        let det = rng.gen_bool(0.7).then(|| self.push(DETS.choose(rng).unwrap(), "DT"));
        let adjs: Vec<usize> = (0..rng.gen_range(0..=2))
            .map(|_| self.push(ADJS.choose(rng).unwrap(), "JJ"))
            .collect();
        let noun = self.push(NOUNS.choose(rng).unwrap(), "NN");
        if let Some(d) = det {
            self.arc(noun, d, "BV");
        }
        for a in adjs {
            self.arc(a, noun, "ARG1");
        }
        noun
    }
}

fn sentence(rng: &mut ChaCha8Rng) -> DepGraph {
    let mut b = Builder::default();
    let mwe_first = rng.gen_bool(0.15);
    let mut attach_mwe = Vec::new();
    if mwe_first {
        let by = b.push("by", "IN");
        let and = b.push("and", "CC");
        let large = b.push("large", "RB");
        b.arc(large, by, "mwe");
        b.arc(large, and, "mwe");
        attach_mwe.push(large);
    }
    let subj = b.noun_phrase(rng);
    let v1 = b.push(VERBS.choose(rng).unwrap(), "VB");
    b.arc(0, v1, ROOT_LABEL);
    b.arc(v1, subj, "ARG1");
    let mut last = v1;
    if rng.gen_bool(0.35) {
        b.push("and", "CC");
        let v2 = b.push(VERBS.choose(rng).unwrap(), "VB");
        b.arc(v1, v2, "AND_C");
        b.arc(v2, subj, "ARG1");
        last = v2;
    }
    if rng.gen_bool(0.6) {
        let obj = b.noun_phrase(rng);
        b.arc(last, obj, "ARG2");
    }
    if rng.gen_bool(0.3) {
        let prep = b.push(PREPS.choose(rng).unwrap(), "IN");
        let pobj = b.noun_phrase(rng);
        b.arc(prep, v1, "ARG1");
        b.arc(prep, pobj, "ARG2");
    }
    if !mwe_first && rng.gen_bool(0.15) {
        let by = b.push("by", "IN");
        let and = b.push("and", "CC");
        let large = b.push("large", "RB");
        b.arc(large, by, "mwe");
        b.arc(large, and, "mwe");
        attach_mwe.push(large);
    }
    for large in attach_mwe {
        b.arc(large, v1, "ARG1");
    }
    b.push(".", "PU");
    DepGraph::new(b.tokens, b.arcs).expect("grammar produces valid graphs")
}

/// `count` sentences, a pure function of `seed`.
pub fn generate(count: usize, seed: u64) -> Vec<DepGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| sentence(&mut rng).with_comment(format!("synthetic {seed}-{k}")))
        .collect()
}
