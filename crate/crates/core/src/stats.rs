//! Corpus-level counts.

use std::fmt::Write;

use crate::graph::DepGraph;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CorpusStats {
    pub sentences: usize,
    pub tokens: usize,
    /// Percentage of tokens with neither governors nor dependents.
    pub disconnected_pct: f64,
    /// Arcs, root arcs included.
    pub edges: usize,
}

pub fn corpus_stats(graphs: &[DepGraph]) -> CorpusStats {
    let mut tokens = 0;
    let mut disconnected = 0;
    let mut edges = 0;
    for g in graphs {
        let (inc, out) = (g.in_degrees(), g.out_degrees());
        tokens += g.len();
        edges += g.arcs().len();
        disconnected += (1..=g.len()).filter(|&j| inc[j] == 0 && out[j] == 0).count();
    }
    CorpusStats {
        sentences: graphs.len(),
        tokens,
        disconnected_pct: if tokens == 0 {
            0.0
        } else {
            100.0 * disconnected as f64 / tokens as f64
        },
        edges,
    }
}

impl CorpusStats {
    pub const FIELDS: [&'static str; 4] = ["sentences", "tokens", "disconnected_pct", "edges"];

    pub fn key_values(&self) -> String {
        format!(
            "sentences={}\ntokens={}\ndisconnected_pct={:.2}\nedges={}\n",
            self.sentences, self.tokens, self.disconnected_pct, self.edges
        )
    }

    pub fn table(&self) -> String {
        let rows = [
            ("Nb of sentences", self.sentences.to_string()),
            ("Nb of tokens", self.tokens.to_string()),
            ("% of disconnected tokens", format!("{:.1}", self.disconnected_pct)),
            ("Nb of edges", self.edges.to_string()),
        ];
        let w = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let v = rows.iter().map(|(_, x)| x.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, x) in rows {
            let _ = writeln!(s, "{k:<w$}  {x:>v$}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn empty_corpus() {
        assert_eq!(corpus_stats(&[]), CorpusStats::default());
    }

    #[test]
    fn single_sentence() {
        let s = corpus_stats(&[fixtures::went_back_and_spoke()]);
        assert_eq!((s.sentences, s.tokens, s.edges), (1, 9, 9));
        assert!((s.disconnected_pct - 100.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn two_sentences_hand_count() {
        // 9 tokens, 7 arcs; tokens 5 of the first and 4 of the second are isolated
        let a = DepGraph::from_forms(
            &["a", "b", "c", "d", "e"],
            &[(0, 1, "ROOT"), (1, 2, "x"), (2, 3, "y"), (3, 4, "z")],
        )
        .unwrap();
        let b = DepGraph::from_forms(&["f", "g", "h", "i"], &[(0, 2, "ROOT"), (2, 1, "x"), (2, 3, "y")]).unwrap();
        let s = corpus_stats(&[a, b]);
        assert_eq!((s.sentences, s.tokens, s.edges), (2, 9, 7));
        assert!((s.disconnected_pct - 22.22).abs() < 0.01);
        assert!(s.key_values().contains("disconnected_pct=22.22"));
        let table = s.table();
        assert_eq!(table.lines().count(), 4);
    }
}
