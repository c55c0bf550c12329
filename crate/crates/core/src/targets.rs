//! Per-token supervision for the auxiliary tasks.

use crate::error::{Error, Result};
use crate::graph::DepGraph;
use crate::vocab::{multiset_key, Vocabulary};

/// `0 ↦ 0`, `k ↦ 1 + ln k` for `k ≥ 1`.
pub fn count_transform(k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        1.0 + (k as f64).ln()
    }
}

/// Nearest count under [`count_transform`]; ties go to the smaller count.
pub fn count_untransform(x: f64) -> usize {
    if x.is_nan() || x < 0.5 {
        return 0;
    }
    // 1 + ln k = x  ⇒  k = e^(x−1); compare the two integer neighbours.
    let k = (x - 1.0).exp().min(1e15);
    let lo = k.floor().max(1.0) as usize;
    let hi = lo + 1;
    let d_lo = (x - count_transform(lo)).abs();
    let d_hi = (x - count_transform(hi)).abs();
    if d_hi < d_lo {
        hi
    } else {
        lo
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuxTargets {
    /// Number of governors, root included.
    pub nbh_raw: usize,
    /// Number of dependents.
    pub nbd_raw: usize,
    pub nbh_t: f64,
    pub nbd_t: f64,
    /// Canonical incoming-label multiset.
    pub multiset: String,
    /// `None` when the multiset was not seen in training.
    pub multiset_class: Option<usize>,
    /// Incoming arcs per label id.
    pub bol_raw: Vec<usize>,
    pub bol_t: Vec<f64>,
}

/// Derives targets for tokens `1..=n` (element `j − 1` is token `j`).
pub fn derive_aux_targets(graph: &DepGraph, vocab: &Vocabulary) -> Result<Vec<AuxTargets>> {
    let n = graph.len();
    let nbh = graph.in_degrees();
    let nbd = graph.out_degrees();
    let labels = vocab.labels.len();
    let mut out = Vec::with_capacity(n);
    for j in 1..=n {
        let mut bol_raw = vec![0; labels];
        for a in graph.incoming(j) {
            let l = vocab
                .labels
                .get(&a.label)
                .ok_or_else(|| Error::Data(format!("label {:?} not in vocabulary", a.label)))?;
            bol_raw[l] += 1;
        }
        let multiset = multiset_key(graph, j, vocab.multiset_includes_root);
        out.push(AuxTargets {
            nbh_raw: nbh[j],
            nbd_raw: nbd[j],
            nbh_t: count_transform(nbh[j]),
            nbd_t: count_transform(nbd[j]),
            multiset_class: vocab.multisets.get(&multiset),
            multiset,
            bol_t: bol_raw.iter().map(|&k| count_transform(k)).collect(),
            bol_raw,
        });
    }
    Ok(out)
}
