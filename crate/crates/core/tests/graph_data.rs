mod common;

use proptest::prelude::*;
use sdp_parser::fixtures;
use sdp_parser::formats::native::{read_native, write_native};
use sdp_parser::formats::sdp::{read_sdp, write_sdp};
use sdp_parser::graph::{Arc, DepGraph, ROOT_LABEL};
use sdp_parser::stats::corpus_stats;
use sdp_parser::targets::{count_transform, count_untransform, derive_aux_targets};
use sdp_parser::vocab::{build_vocab, VocabOptions};

fn sdp_round_trip(graphs: &[DepGraph]) -> Vec<DepGraph> {
    let mut buf = Vec::new();
    write_sdp(&mut buf, graphs).unwrap();
    read_sdp(buf.as_slice()).unwrap()
}

fn native_round_trip(graphs: &[DepGraph]) -> Vec<DepGraph> {
    let mut buf = Vec::new();
    write_native(&mut buf, graphs).unwrap();
    read_native(buf.as_slice()).unwrap()
}

/// SDP marks root arcs with the top column only, so their label is fixed.
fn with_root_labels(g: &DepGraph) -> DepGraph {
    let arcs = g
        .arcs()
        .iter()
        .map(|a| {
            if a.head == 0 {
                Arc::new(0, a.dep, ROOT_LABEL)
            } else {
                a.clone()
            }
        })
        .collect();
    g.with_arcs(arcs).unwrap()
}

#[test]
fn fixtures_survive_both_formats() {
    let cycle = DepGraph::from_forms(&["a", "b"], &[(1, 2, "X"), (2, 1, "Y")]).unwrap();
    let all = vec![
        fixtures::went_back_and_spoke(),
        fixtures::cela_l_a_habitue(),
        fixtures::rule_of_thumb_conflict(),
        cycle,
    ];
    assert_eq!(sdp_round_trip(&all), all);
    assert_eq!(native_round_trip(&all), all);
}

#[test]
fn spoke_has_two_governors_after_reading_sdp() {
    let g = &sdp_round_trip(&[fixtures::went_back_and_spoke()])[0];
    let mut labels: Vec<(usize, &str)> = g.incoming(5).map(|a| (a.head, a.label.as_str())).collect();
    labels.sort();
    assert_eq!(labels, vec![(2, "AND_C"), (6, "ARG1")]);
}

#[test]
fn stats_match_hand_counts() {
    let s = corpus_stats(&[fixtures::went_back_and_spoke(), fixtures::cela_l_a_habitue()]);
    // Disconnected: "and" in the first sentence; "a", "à", "être" in the second.
    assert_eq!(s.sentences, 2);
    assert_eq!(s.tokens, 17);
    assert_eq!(s.edges, 13);
    assert!((s.disconnected_pct - 100.0 * 4.0 / 17.0).abs() < 1e-12);
}

#[test]
fn stats_fields_are_exactly_the_four_corpus_statistics() {
    let s = corpus_stats(&[fixtures::went_back_and_spoke()]);
    let text = s.key_values();
    let keys: Vec<&str> = text.lines().map(|l| l.split('=').next().unwrap()).collect();
    assert_eq!(keys, ["sentences", "tokens", "disconnected_pct", "edges"]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn native_round_trip_is_identity(seed in 0u64..1_000_000) {
        let graphs = common::random_corpus(seed, 3, 6);
        prop_assert_eq!(native_round_trip(&graphs), graphs);
    }

    #[test]
    fn sdp_round_trip_is_identity(seed in 0u64..1_000_000) {
        let graphs: Vec<DepGraph> = common::random_corpus(seed, 3, 6).iter().map(with_root_labels).collect();
        prop_assert_eq!(sdp_round_trip(&graphs), graphs);
    }

    #[test]
    fn aux_targets_match_brute_force(seed in 0u64..1_000_000) {
        let graphs = common::random_corpus(seed, 2, 6);
        let vocab = build_vocab(&graphs, &VocabOptions::default());
        for g in &graphs {
            let targets = derive_aux_targets(g, &vocab).unwrap();
            for (t, (nbh, nbd, ms, bag)) in targets.iter().zip(common::brute_force_aux(g)) {
                prop_assert_eq!(t.nbh_raw, nbh);
                prop_assert_eq!(t.nbd_raw, nbd);
                prop_assert_eq!(&t.multiset, &ms);
                prop_assert_eq!(t.nbh_raw, t.bol_raw.iter().sum::<usize>());
                for (l, name) in vocab.labels.iter().enumerate() {
                    prop_assert_eq!(t.bol_raw[l], bag.get(name).copied().unwrap_or(0));
                    prop_assert_eq!(t.bol_t[l], count_transform(t.bol_raw[l]));
                }
            }
        }
    }

    #[test]
    fn untransform_inverts_transform(k in 0usize..100_000) {
        prop_assert_eq!(count_untransform(count_transform(k)), k);
    }

    #[test]
    fn untransform_picks_a_nearest_count(x in -2.0f64..12.0) {
        let k = count_untransform(x);
        let d = (x - count_transform(k)).abs();
        if x >= 0.5 {
            prop_assert!(k >= 1);
            for other in [k.saturating_sub(1).max(1), k + 1] {
                prop_assert!(d <= (x - count_transform(other)).abs() + 1e-12);
            }
        } else {
            prop_assert_eq!(k, 0);
        }
    }
}

#[test]
fn dummy_root_is_lifted() {
    let mut g = DepGraph::from_forms(&["<s>", "Il", "dort"], &[(1, 3, "root"), (3, 2, "suj")]).unwrap();
    g.tokens[0].contextual = Some(vec![0.5, 0.25]);
    let lifted = g.lift_dummy_root().unwrap();
    assert_eq!(lifted.len(), 2);
    assert_eq!(lifted.arcs(), &[Arc::new(2, 1, "suj"), Arc::new(0, 2, "root")]);
    assert_eq!(lifted.root_contextual, Some(vec![0.5, 0.25]));
}
