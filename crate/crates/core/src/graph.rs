//! Dependency graphs over tokenized sentences.
//!
//! Node `0` is the virtual root; tokens are numbered from `1`. A graph is an
//! arbitrary set of labeled arcs: cycles, reentrancies and disconnected
//! tokens are all legal.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Label carried by arcs leaving the virtual root.
pub const ROOT_LABEL: &str = "ROOT";

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub index: usize,
    pub form: String,
    pub lemma: Option<String>,
    pub pos: Option<String>,
    /// SDP frame column, carried through untouched.
    pub frame: Option<String>,
    /// Precomputed contextual vector for this token, if supplied.
    pub contextual: Option<Vec<f64>>,
}

impl Token {
    pub fn new(index: usize, form: impl Into<String>) -> Self {
        Token {
            index,
            form: form.into(),
            lemma: None,
            pos: None,
            frame: None,
            contextual: None,
        }
    }

    pub fn with_lemma(mut self, lemma: impl Into<String>) -> Self {
        self.lemma = non_empty(lemma.into());
        self
    }

    pub fn with_pos(mut self, pos: impl Into<String>) -> Self {
        self.pos = non_empty(pos.into());
        self
    }

    pub fn with_frame(mut self, frame: impl Into<String>) -> Self {
        self.frame = non_empty(frame.into());
        self
    }
}

fn non_empty(s: String) -> Option<String> {
    if s.is_empty() {
        None
    } else {
        Some(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arc {
    pub head: usize,
    pub dep: usize,
    pub label: String,
}

impl Arc {
    pub fn new(head: usize, dep: usize, label: impl Into<String>) -> Self {
        Arc {
            head,
            dep,
            label: label.into(),
        }
    }

    pub fn is_root(&self) -> bool {
        self.head == 0
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}->{}", self.head, self.label, self.dep)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct DepGraph {
    pub tokens: Vec<Token>,
    /// Sorted by `(dep, head, label)`.
    arcs: Vec<Arc>,
    pub comment: Option<String>,
    /// Contextual vector standing in for the root node, when the corpus
    /// provides one (sequence-start vector).
    pub root_contextual: Option<Vec<f64>>,
}

impl DepGraph {
    /// Builds a graph, checking token numbering and arc endpoints.
    ///
    /// Repeated `(head, dep)` pairs are kept so that [`validate`] can
    /// report them.
    pub fn new(tokens: Vec<Token>, mut arcs: Vec<Arc>) -> Result<Self> {
        for (i, t) in tokens.iter().enumerate() {
            if t.index != i + 1 {
                return Err(Error::Data(format!(
                    "token at position {} has index {}",
                    i + 1,
                    t.index
                )));
            }
        }
        let n = tokens.len();
        for a in &arcs {
            if a.dep == 0 || a.dep > n || a.head > n {
                return Err(Error::Data(format!("arc {a} outside 0..={n}")));
            }
            if a.head == a.dep {
                return Err(Error::Data(format!("self-loop {a}")));
            }
        }
        arcs.sort_by(|a, b| (a.dep, a.head, &a.label).cmp(&(b.dep, b.head, &b.label)));
        Ok(DepGraph {
            tokens,
            arcs,
            comment: None,
            root_contextual: None,
        })
    }

    /// Builds a graph from bare forms, arcs given as `(head, dep, label)`.
    pub fn from_forms(forms: &[&str], arcs: &[(usize, usize, &str)]) -> Result<Self> {
        let tokens = forms.iter().enumerate().map(|(i, f)| Token::new(i + 1, *f)).collect();
        let arcs = arcs.iter().map(|&(h, d, l)| Arc::new(h, d, l)).collect();
        DepGraph::new(tokens, arcs)
    }

    pub fn with_comment(mut self, comment: impl Into<String>) -> Self {
        self.comment = Some(comment.into());
        self
    }

    /// Number of tokens (excluding the root).
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Same tokens, different arcs.
    pub fn with_arcs(&self, arcs: Vec<Arc>) -> Result<Self> {
        let mut g = DepGraph::new(self.tokens.clone(), arcs)?;
        g.comment = self.comment.clone();
        g.root_contextual = self.root_contextual.clone();
        Ok(g)
    }

    pub fn incoming(&self, dep: usize) -> impl Iterator<Item = &Arc> {
        let start = self.arcs.partition_point(|a| a.dep < dep);
        self.arcs[start..].iter().take_while(move |a| a.dep == dep)
    }

    pub fn outgoing(&self, head: usize) -> impl Iterator<Item = &Arc> {
        self.arcs.iter().filter(move |a| a.head == head)
    }

    /// Governor count per node, indexed `0..=n` (entry 0 is always 0).
    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.len() + 1];
        for a in &self.arcs {
            d[a.dep] += 1;
        }
        d
    }

    /// Dependent count per node, indexed `0..=n`.
    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.len() + 1];
        for a in &self.arcs {
            d[a.head] += 1;
        }
        d
    }

    pub fn has_arc(&self, head: usize, dep: usize) -> bool {
        self.incoming(dep).any(|a| a.head == head)
    }

    /// Treats token 1 as a dummy root: arcs leaving it become root arcs and
    /// every other token shifts down by one. Its contextual vector becomes
    /// the root's.
    pub fn lift_dummy_root(&self) -> Result<Self> {
        let first = self
            .tokens
            .first()
            .ok_or_else(|| Error::Data("cannot lift a root out of an empty sentence".into()))?;
        if self.arcs.iter().any(|a| a.dep == 1 || a.head == 0) {
            return Err(Error::Data(
                "dummy root token must have no governors and the graph no root arcs".into(),
            ));
        }
        let tokens = self.tokens[1..]
            .iter()
            .map(|t| Token {
                index: t.index - 1,
                ..t.clone()
            })
            .collect();
        let arcs = self
            .arcs
            .iter()
            .map(|a| Arc::new(a.head.saturating_sub(1), a.dep - 1, a.label.clone()))
            .collect();
        let mut g = DepGraph::new(tokens, arcs)?;
        g.comment = self.comment.clone();
        g.root_contextual = first.contextual.clone();
        Ok(g)
    }
}

/// Label classes checked by [`validate`].
#[derive(Clone, Debug)]
pub struct ValidateConfig {
    /// A token governed through one of these labels must have no other
    /// incoming label.
    pub exclusive: Vec<String>,
    /// A token may have at most one incoming arc with one of these labels.
    pub unique: Vec<String>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            exclusive: vec!["mwe".into()],
            unique: vec!["punct".into()],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Token `dep` has an exclusive-label arc alongside differently labeled
    /// ones.
    ExclusiveConflict {
        dep: usize,
        exclusive: String,
        other: String,
    },
    /// Token `dep` has `count ≥ 2` governors through unique labels.
    RepeatedUnique { dep: usize, count: usize },
    /// `(head, dep)` occurs more than once.
    DuplicateArc { head: usize, dep: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ExclusiveConflict { dep, exclusive, other } => {
                write!(f, "exclusive dep={dep} labels={exclusive},{other}")
            }
            Violation::RepeatedUnique { dep, count } => {
                write!(f, "unique dep={dep} count={count}")
            }
            Violation::DuplicateArc { head, dep } => write!(f, "duplicate head={head} dep={dep}"),
        }
    }
}

/// Counts of [`Violation`]s by class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct ViolationCounts {
    pub exclusive: usize,
    pub unique: usize,
    pub duplicate: usize,
}

impl ViolationCounts {
    pub fn add(&mut self, v: &Violation) {
        match v {
            Violation::ExclusiveConflict { .. } => self.exclusive += 1,
            Violation::RepeatedUnique { .. } => self.unique += 1,
            Violation::DuplicateArc { .. } => self.duplicate += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.exclusive + self.unique + self.duplicate
    }
}

/// Lists label-combination and duplicate-arc violations, at most one per
/// token for each label class.
pub fn validate(graph: &DepGraph, config: &ValidateConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    for dep in 1..=graph.len() {
        let incoming: Vec<&Arc> = graph.incoming(dep).collect();
        if let Some(ex) = incoming.iter().find(|a| config.exclusive.contains(&a.label)) {
            if let Some(other) = incoming.iter().find(|a| a.label != ex.label) {
                out.push(Violation::ExclusiveConflict {
                    dep,
                    exclusive: ex.label.clone(),
                    other: other.label.clone(),
                });
            }
        }
        let unique = incoming.iter().filter(|a| config.unique.contains(&a.label)).count();
        if unique >= 2 {
            out.push(Violation::RepeatedUnique { dep, count: unique });
        }
        let mut heads: BTreeMap<usize, usize> = BTreeMap::new();
        for a in &incoming {
            *heads.entry(a.head).or_default() += 1;
        }
        for (head, c) in heads {
            if c > 1 {
                out.push(Violation::DuplicateArc { head, dep });
            }
        }
    }
    out
}

/// Labels of the arcs entering `dep`, as a map label → count.
pub fn incoming_label_counts(graph: &DepGraph, dep: usize) -> HashMap<&str, usize> {
    let mut m = HashMap::new();
    for a in graph.incoming(dep) {
        *m.entry(a.label.as_str()).or_default() += 1;
    }
    m
}
