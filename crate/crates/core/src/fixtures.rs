//! Small hand-built graphs used in tests and documentation.

use crate::graph::DepGraph;

/// "She went back and spoke to the desk clerk." in DM style: "spoke" is
/// governed by "went" (AND_C) and "to" (ARG1), "and" is disconnected.
pub fn went_back_and_spoke() -> DepGraph {
    DepGraph::from_forms(
        &["She", "went", "back", "and", "spoke", "to", "the", "desk", "clerk."],
        &[
            (2, 1, "ARG1"),
            (5, 1, "ARG1"),
            (0, 2, "ROOT"),
            (2, 3, "LOC"),
            (2, 5, "AND_C"),
            (6, 5, "ARG1"),
            (9, 7, "BV"),
            (9, 8, "COMPOUND"),
            (6, 9, "ARG2"),
        ],
    )
    .expect("fixture")
}

/// "Cela l' a habitué à être très sollicité." as a deep syntactic graph:
/// the clitic "l'" is the object of both "habitué" and "sollicité".
pub fn cela_l_a_habitue() -> DepGraph {
    DepGraph::from_forms(
        &["Cela", "l'", "a", "habitué", "à", "être", "très", "sollicité."],
        &[(4, 1, "suj"), (4, 2, "obj"), (8, 7, "mod"), (8, 2, "obj")],
    )
    .expect("fixture")
}

/// "Here is a good rule of thumb : ..." with the competing compositional
/// analysis of "rule" (ARG1 of "good") kept alongside its mwe attachment.
pub fn rule_of_thumb_conflict() -> DepGraph {
    DepGraph::from_forms(
        &["Here", "is", "a", "good", "rule", "of", "thumb", ":", "..."],
        &[
            (7, 5, "mwe"),
            (7, 6, "mwe"),
            (4, 5, "ARG1"),
            (8, 1, "ARG1"),
            (0, 8, "ROOT"),
        ],
    )
    .expect("fixture")
}
