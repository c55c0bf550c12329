//! String ↔ id tables built from the training corpus.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::graph::{DepGraph, ROOT_LABEL};

pub const UNK: usize = 0;
pub const DROP: usize = 1;
pub const ROOT: usize = 2;
const RESERVED: [&str; 3] = ["<UNK>", "*DROP*", "<ROOT>"];

/// A bijection between strings and dense ids.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Interner {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Interner {
    fn from(items: Vec<String>) -> Self {
        let index = items.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Interner { items, index }
    }
}

impl From<Interner> for Vec<String> {
    fn from(i: Interner) -> Self {
        i.items
    }
}

impl Interner {
    pub fn intern(&mut self, s: &str) -> usize {
        if let Some(&i) = self.index.get(s) {
            return i;
        }
        let i = self.items.len();
        self.items.push(s.to_string());
        self.index.insert(s.to_string(), i);
        i
    }

    pub fn get(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.items[id]
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(String::as_str)
    }

    fn with_reserved() -> Self {
        Interner::from(RESERVED.iter().map(|s| s.to_string()).collect::<Vec<_>>())
    }
}

#[derive(Clone, Debug)]
pub struct VocabOptions {
    /// Forms seen fewer times map to UNK.
    pub min_count: usize,
    /// Whether a root arc's label takes part in a token's label multiset.
    pub multiset_includes_root: bool,
}

impl Default for VocabOptions {
    fn default() -> Self {
        VocabOptions {
            min_count: 1,
            multiset_includes_root: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// Ids 0, 1, 2 are UNK, *DROP* and the root symbol.
    pub forms: Interner,
    pub lemmas: Interner,
    pub pos: Interner,
    /// Exactly the arc labels seen in training, sorted.
    pub labels: Interner,
    /// Canonical incoming-label multisets seen in training, sorted.
    pub multisets: Interner,
    pub multiset_includes_root: bool,
}

/// Canonical multiset string of the labels entering `dep`: sorted, joined
/// by `+`; empty for a token without governors.
pub fn multiset_key(graph: &DepGraph, dep: usize, include_root: bool) -> String {
    let mut labels: Vec<&str> = graph
        .incoming(dep)
        .filter(|a| include_root || !a.is_root())
        .map(|a| a.label.as_str())
        .collect();
    labels.sort_unstable();
    labels.join("+")
}

pub fn build_vocab(train: &[DepGraph], options: &VocabOptions) -> Vocabulary {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    for g in train {
        for t in &g.tokens {
            let c = counts.entry(t.form.as_str()).or_insert_with(|| {
                order.push(t.form.as_str());
                0
            });
            *c += 1;
        }
    }
    let mut forms = Interner::with_reserved();
    for f in order {
        if counts[f] >= options.min_count {
            forms.intern(f);
        }
    }
    let mut lemmas = Interner::with_reserved();
    let mut pos = Interner::with_reserved();
    let mut labels: Vec<&str> = Vec::new();
    let mut multisets: Vec<String> = Vec::new();
    for g in train {
        for t in &g.tokens {
            if let Some(l) = &t.lemma {
                lemmas.intern(l);
            }
            if let Some(p) = &t.pos {
                pos.intern(p);
            }
            multisets.push(multiset_key(g, t.index, options.multiset_includes_root));
        }
        labels.extend(g.arcs().iter().map(|a| a.label.as_str()));
    }
    labels.sort_unstable();
    labels.dedup();
    multisets.sort_unstable();
    multisets.dedup();
    Vocabulary {
        forms,
        lemmas,
        pos,
        labels: Interner::from(labels.into_iter().map(String::from).collect::<Vec<_>>()),
        multisets: Interner::from(multisets),
        multiset_includes_root: options.multiset_includes_root,
    }
}

impl Vocabulary {
    pub fn form_id(&self, form: &str) -> usize {
        self.forms.get(form).unwrap_or(UNK)
    }

    pub fn lemma_id(&self, lemma: &str) -> usize {
        self.lemmas.get(lemma).unwrap_or(UNK)
    }

    pub fn pos_id(&self, pos: &str) -> usize {
        self.pos.get(pos).unwrap_or(UNK)
    }

    pub fn root_label(&self) -> Option<usize> {
        self.labels.get(ROOT_LABEL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn multisets_from_training_only() {
        let v = build_vocab(&[fixtures::went_back_and_spoke()], &VocabOptions::default());
        assert!(v.multisets.get("AND_C+ARG1").is_some());
        assert!(v.multisets.get("").is_some());
        assert!(v.multisets.get("ROOT").is_some());
        assert_eq!(v.labels.len(), 7);
        assert!(v.root_label().is_some());
    }

    #[test]
    fn root_can_be_left_out_of_multisets() {
        let opts = VocabOptions {
            multiset_includes_root: false,
            ..VocabOptions::default()
        };
        let v = build_vocab(&[fixtures::went_back_and_spoke()], &opts);
        assert!(v.multisets.get("ROOT").is_none());
        // "went" only has the root arc
        assert_eq!(multiset_key(&fixtures::went_back_and_spoke(), 2, false), "");
    }

    #[test]
    fn rare_forms_become_unknown() {
        let g1 = DepGraph::from_forms(&["a", "a", "b"], &[]).unwrap();
        let g2 = DepGraph::from_forms(&["a"], &[]).unwrap();
        let v = build_vocab(
            &[g1, g2],
            &VocabOptions {
                min_count: 2,
                ..VocabOptions::default()
            },
        );
        assert_eq!(v.form_id("b"), UNK);
        assert_ne!(v.form_id("a"), UNK);
        assert_ne!(UNK, DROP);
    }

    #[test]
    fn json_round_trip_rebuilds_index() {
        let v = build_vocab(&[fixtures::went_back_and_spoke()], &VocabOptions::default());
        let text = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.form_id("spoke"), v.form_id("spoke"));
    }
}
