//! The complete parser: encoder, scorers, auxiliary heads and loss weights.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdp_tensor::{ParamStore, Tape, Var};

use crate::config::{LossMode, ModelConfig, Task, TrainConfig};
use crate::decode::{budget_decode, greedy_decode, to_graph, ArcScores, Budgets, DecodeMode, LabelScores};
use crate::encoder::Encoder;
use crate::error::{Error, Result};
use crate::graph::DepGraph;
use crate::init::Init;
use crate::objective::UncertaintyWeights;
use crate::scorer::{AuxHead, AuxHeads, AuxOutputs, Scorer};
use crate::vocab::Vocabulary;

pub const PARAMS_FILE: &str = "params.bin";
pub const VOCAB_FILE: &str = "vocab.json";
pub const CONFIG_FILE: &str = "config.txt";

/// Result of running the network on one sentence.
pub struct Forward<'t> {
    pub n: usize,
    pub labels: usize,
    /// `n × (n+1)`; see [`Scorer::arc_scores`].
    pub arc: Var<'t>,
    /// `(n·L) × (n+1)`; see [`Scorer::label_scores`].
    pub label: Var<'t>,
    pub aux: Option<AuxOutputs<'t>>,
}

impl Forward<'_> {
    pub fn arc_scores(&self) -> ArcScores {
        ArcScores::from_matrix(self.n, self.arc.value().data())
    }

    pub fn label_scores(&self) -> LabelScores {
        LabelScores::from_matrix(self.n, self.labels, self.label.value().data())
    }
}

#[derive(Debug)]
pub struct ParserModel {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    pub encoder: Encoder,
    pub scorer: Scorer,
    pub aux: AuxHeads,
    /// Present in uncertainty mode.
    pub weights: Option<UncertaintyWeights>,
    aux_calls: AtomicUsize,
}

impl ParserModel {
    pub fn new(config: &ModelConfig, vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut init = Init::new(&mut store, config.init_seed);
        let encoder = Encoder::new(&config.encoder, &vocab, &mut init)?;
        let r = config.encoder.output_width();
        let labels = vocab.labels.len();
        let scorer = Scorer::new(&mut init, &config.scorer, &config.stackprop, r, labels)?;
        let sc = &config.scorer;
        let tasks = config.tasks;
        let mut head = |task: Task, output: usize| -> Result<Option<AuxHead>> {
            if !tasks.contains(task) {
                return Ok(None);
            }
            Ok(Some(AuxHead::new(
                &mut init,
                &format!("aux.{}", task.name()),
                r,
                sc,
                output,
            )?))
        };
        let aux = AuxHeads {
            h: head(Task::H, 1)?,
            d: head(Task::D, 1)?,
            s: head(Task::S, vocab.multisets.len())?,
            b: head(Task::B, labels)?,
        };
        let weights = match config.loss_mode {
            LossMode::Uncertainty => Some(UncertaintyWeights::new(&mut init, tasks, config.sigma_floor)?),
            LossMode::PlainSum => None,
        };
        Ok(ParserModel {
            config: config.clone(),
            vocab,
            store,
            encoder,
            scorer,
            aux,
            weights,
            aux_calls: AtomicUsize::new(0),
        })
    }

    /// How many times the auxiliary heads have been evaluated.
    pub fn aux_forward_count(&self) -> usize {
        self.aux_calls.load(Ordering::Relaxed)
    }

    /// Runs the network. Auxiliary heads are evaluated when `want_aux` is
    /// set or when stack propagation needs their hidden layers.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape,
        graph: &DepGraph,
        train: bool,
        want_aux: bool,
        rng: &mut dyn RngCore,
    ) -> Result<Forward<'t>> {
        self.forward_with(&self.store, tape, graph, train, want_aux, rng)
    }

    /// [`ParserModel::forward`] reading parameters from `store`, which must
    /// have this model's layout (e.g. a perturbed copy).
    pub fn forward_with<'t>(
        &self,
        store: &ParamStore,
        tape: &'t Tape,
        graph: &DepGraph,
        train: bool,
        want_aux: bool,
        rng: &mut dyn RngCore,
    ) -> Result<Forward<'t>> {
        let enc = self.encoder.forward(tape, store, graph, &self.vocab, train, rng)?;
        let run_aux = !self.aux.is_empty() && (want_aux || self.config.stackprop.enabled());
        let aux = if run_aux {
            self.aux_calls.fetch_add(1, Ordering::Relaxed);
            Some(self.aux.forward(tape, store, enc.tokens, train, rng)?)
        } else {
            None
        };
        let spec = self.scorer.specialize(tape, store, &enc, train, rng)?;
        let hidden_h = aux.as_ref().and_then(|a| a.hidden_h);
        let hidden_b = aux.as_ref().and_then(|a| a.hidden_b);
        let arc = self.scorer.arc_scores(tape, store, &spec, hidden_h)?;
        let label = self.scorer.label_scores(tape, store, &spec, hidden_b)?;
        Ok(Forward {
            n: graph.len(),
            labels: self.scorer.labels(),
            arc,
            label,
            aux,
        })
    }

    /// Parses one sentence with each requested decoding mode, sharing a
    /// single eval-mode forward pass. Also returns, per mode, the tokens
    /// whose budget had to be truncated.
    pub fn predict(&self, graph: &DepGraph, modes: &[DecodeMode]) -> Result<Vec<(DepGraph, Vec<usize>)>> {
        for &m in modes {
            let needed = match m {
                DecodeMode::Greedy => None,
                DecodeMode::BudgetH => Some(Task::H),
                DecodeMode::BudgetB => Some(Task::B),
            };
            if let Some(t) = needed {
                if !self.config.tasks.contains(t) {
                    return Err(Error::Config(format!("decode mode {m} needs task {}", t.name())));
                }
            }
        }
        let want_aux = modes.iter().any(|&m| m != DecodeMode::Greedy);
        let tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let fwd = self.forward(&tape, graph, false, want_aux, &mut rng)?;
        let arcs = fwd.arc_scores();
        let labels = fwd.label_scores();
        let mut out = Vec::with_capacity(modes.len());
        for &m in modes {
            let (decoded, truncated) = match m {
                DecodeMode::Greedy => (greedy_decode(&arcs, &labels), Vec::new()),
                DecodeMode::BudgetH | DecodeMode::BudgetB => {
                    let aux = fwd
                        .aux
                        .as_ref()
                        .ok_or_else(|| Error::Contract("auxiliary outputs missing".into()))?;
                    let budgets = if m == DecodeMode::BudgetH {
                        let nbh = aux
                            .nbh
                            .ok_or_else(|| Error::Contract("no governor-count output".into()))?;
                        Budgets::heads_from_predictions(nbh.value().data())
                    } else {
                        let bol = aux
                            .bol
                            .ok_or_else(|| Error::Contract("no bag-of-labels output".into()))?;
                        Budgets::labels_from_predictions(bol.value().data(), fwd.n, fwd.labels)
                    };
                    let d = budget_decode(&arcs, &labels, &budgets)?;
                    (d.arcs, d.truncated)
                }
            };
            out.push((to_graph(graph, &decoded, &self.vocab)?, truncated));
        }
        Ok(out)
    }

    /// Writes parameters, vocabulary and configuration into `dir`.
    pub fn save(&self, dir: &Path, train: &TrainConfig) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.store
            .write_to(BufWriter::new(File::create(dir.join(PARAMS_FILE))?))?;
        serde_json::to_writer(BufWriter::new(File::create(dir.join(VOCAB_FILE))?), &self.vocab)?;
        let mut snapshot = train.clone();
        snapshot.model = self.config.clone();
        fs::write(dir.join(CONFIG_FILE), snapshot.to_key_values())?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<(Self, TrainConfig)> {
        let text = fs::read_to_string(dir.join(CONFIG_FILE))?;
        let config = TrainConfig::from_key_values(&text)?;
        let vocab: Vocabulary = serde_json::from_reader(BufReader::new(File::open(dir.join(VOCAB_FILE))?))?;
        let mut model = ParserModel::new(&config.model, vocab)?;
        let stored = ParamStore::read_from(BufReader::new(File::open(dir.join(PARAMS_FILE))?))?;
        if stored.len() != model.store.len() {
            return Err(Error::Data(format!(
                "checkpoint has {} parameters, model expects {}",
                stored.len(),
                model.store.len()
            )));
        }
        model.store.assign_from(&stored)?;
        Ok((model, config))
    }
}
