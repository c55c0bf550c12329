//! Multi-task biaffine semantic dependency graph parser.
//!
//! Sentences are encoded by a biLSTM over word (and optionally lemma, POS and
//! precomputed contextual) embeddings; arcs and labels are scored by biaffine
//! forms. Auxiliary per-token heads predict the number of governors, the
//! number of dependents, the incoming-label multiset and the bag of incoming
//! labels, and can feed their hidden layers back into the scorers.

pub mod config;
pub mod decode;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod formats;
pub mod graph;
pub mod init;
pub mod model;
pub mod objective;
pub mod scorer;
pub mod significance;
pub mod stats;
pub mod synthetic;
pub mod targets;
pub mod train;
pub mod vocab;

pub use config::{ModelConfig, Task, TaskSet, TrainConfig};
pub use decode::{budget_decode, greedy_decode, ArcScores, Budgets, LabelScores};
pub use error::{Error, Result};
pub use eval::{head_count_accuracy, labeled_f, EvalReport};
pub use graph::{Arc, DepGraph, Token};
pub use model::ParserModel;
pub use significance::{fisher_pitman, SignificanceResult};
pub use targets::{count_transform, count_untransform, derive_aux_targets, AuxTargets};
pub use vocab::{build_vocab, Vocabulary};
