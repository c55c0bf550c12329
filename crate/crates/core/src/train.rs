//! Training loop with per-epoch dev evaluation and early stopping.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdp_tensor::optim::{Adam, AdamConfig};
use sdp_tensor::{ParamStore, Tape};

use crate::config::{Task, TrainConfig};
use crate::decode::DecodeMode;
use crate::error::{Error, Result};
use crate::eval::labeled_f;
use crate::graph::{DepGraph, ValidateConfig};
use crate::model::ParserModel;
use crate::objective::{combine, LossAccumulator, LossTerm};
use crate::targets::{derive_aux_targets, AuxTargets};
use crate::vocab::{build_vocab, VocabOptions};

const SHUFFLE_STREAM: u64 = 0x5348_5546;
const DROPOUT_STREAM: u64 = 0x4452_4f50;

/// Order in which training sentences are visited in `epoch`.
pub fn epoch_order(seed: u64, epoch: usize, len: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ SHUFFLE_STREAM);
    rng.set_stream(epoch as u64);
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut rng);
    order
}

/// Generator for the dropout masks and lexical drops of one update step.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ DROPOUT_STREAM);
    rng.set_stream(step);
    rng
}

/// Labeled F-scores tracked on the dev set.
#[derive(Clone, Debug, PartialEq)]
pub struct DevScores {
    pub main: f64,
    /// With the budget from the governor-count head, when task H is active.
    pub budget_h: Option<f64>,
    /// With the budgets from the bag-of-labels head, when task B is active.
    pub budget_b: Option<f64>,
}

impl DevScores {
    pub fn tracked(&self) -> Vec<f64> {
        std::iter::once(self.main)
            .chain(self.budget_h)
            .chain(self.budget_b)
            .collect()
    }
}

/// Stops once every tracked score has been strictly below its running best
/// for `patience` consecutive evaluations.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: Vec<f64>,
    bad: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StopDecision {
    /// The main score (first tracked value) is a new best.
    pub main_improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: Vec::new(),
            bad: 0,
        }
    }

    pub fn observe(&mut self, scores: &[f64]) -> StopDecision {
        if self.best.len() != scores.len() {
            self.best = vec![f64::NEG_INFINITY; scores.len()];
        }
        let all_below = scores.iter().zip(&self.best).all(|(s, b)| s < b);
        let main_improved = scores.first().zip(self.best.first()).is_some_and(|(s, b)| s > b);
        for (b, &s) in self.best.iter_mut().zip(scores) {
            if s > *b {
                *b = s;
            }
        }
        self.bad = if all_below { self.bad + 1 } else { 0 };
        StopDecision {
            main_improved,
            stop: self.patience > 0 && self.bad >= self.patience,
        }
    }
}

/// Parses every sentence with the greedy and available budget decoders.
pub fn dev_scores(model: &ParserModel, dev: &[DepGraph]) -> Result<DevScores> {
    let mut modes = vec![DecodeMode::Greedy];
    if model.config.tasks.contains(Task::H) {
        modes.push(DecodeMode::BudgetH);
    }
    if model.config.tasks.contains(Task::B) {
        modes.push(DecodeMode::BudgetB);
    }
    let mut preds: Vec<Vec<DepGraph>> = vec![Vec::with_capacity(dev.len()); modes.len()];
    for g in dev {
        for (k, (p, _)) in model.predict(g, &modes)?.into_iter().enumerate() {
            preds[k].push(p);
        }
    }
    let audit = ValidateConfig::default();
    let mut scores = DevScores {
        main: labeled_f(dev, &preds[0], &audit)?.labeled.f,
        budget_h: None,
        budget_b: None,
    };
    for (k, m) in modes.iter().enumerate().skip(1) {
        let f = Some(labeled_f(dev, &preds[k], &audit)?.labeled.f);
        match m {
            DecodeMode::BudgetH => scores.budget_h = f,
            DecodeMode::BudgetB => scores.budget_b = f,
            DecodeMode::Greedy => {}
        }
    }
    Ok(scores)
}

#[derive(Clone, Debug)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean over the epoch's batches of each task term.
    pub losses: Vec<LossTerm>,
    pub dev: Option<DevScores>,
}

pub struct TrainOutcome {
    pub model: ParserModel,
    pub epochs: usize,
    /// Epoch whose parameters were kept (the last one without dev data).
    pub best_epoch: usize,
    pub best: Option<DevScores>,
    pub history: Vec<EpochRecord>,
    pub stopped_early: bool,
}

/// A freshly initialized model whose vocabulary comes from `train` only.
pub fn prepare_model(config: &TrainConfig, train: &[DepGraph]) -> Result<ParserModel> {
    if train.is_empty() {
        return Err(Error::Data("empty training corpus".into()));
    }
    let vocab = build_vocab(
        train,
        &VocabOptions {
            min_count: config.model.min_count,
            multiset_includes_root: config.model.multiset_includes_root,
        },
    );
    let mut model_config = config.model.clone();
    model_config.init_seed = config.seed;
    ParserModel::new(&model_config, vocab)
}

/// Prepares and trains a model. One `key=value` line per task and epoch,
/// and one per dev evaluation, go to `log`.
pub fn train(config: &TrainConfig, train: &[DepGraph], dev: &[DepGraph], log: &mut dyn Write) -> Result<TrainOutcome> {
    let model = prepare_model(config, train)?;
    train_model(config, model, train, dev, log)
}

/// Trains an already initialized model, e.g. one with pretrained
/// embeddings loaded.
pub fn train_model(
    config: &TrainConfig,
    mut model: ParserModel,
    train: &[DepGraph],
    dev: &[DepGraph],
    log: &mut dyn Write,
) -> Result<TrainOutcome> {
    let targets: Vec<Vec<AuxTargets>> = train
        .iter()
        .map(|g| derive_aux_targets(g, &model.vocab))
        .collect::<Result<_>>()?;
    let mut adam = Adam::new(AdamConfig {
        learning_rate: config.learning_rate,
        beta1: config.beta1,
        beta2: config.beta2,
        eps: config.adam_eps,
    });
    let tasks = model.config.tasks;
    let mut stopping = EarlyStopping::new(config.patience);
    let mut snapshot: Option<(usize, ParamStore, DevScores)> = None;
    let mut history = Vec::new();
    let mut step = 0u64;
    let mut stopped_early = false;
    let mut epochs = 0;
    for epoch in 1..=config.max_epochs {
        epochs = epoch;
        let order = epoch_order(config.seed, epoch, train.len());
        let mut sums: Vec<LossTerm> = Vec::new();
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            step += 1;
            let mut rng = step_rng(config.seed, step);
            let (grads, terms) = {
                let tape = Tape::new();
                let mut acc = LossAccumulator::new(&tape);
                for &k in batch {
                    let fwd = model.forward(&tape, &train[k], true, tasks.has_aux(), &mut rng)?;
                    acc.add_sentence(
                        tasks,
                        fwd.arc,
                        fwd.label,
                        fwd.aux.as_ref(),
                        &train[k],
                        &targets[k],
                        &model.vocab,
                    )?;
                }
                let losses = acc.finish(tasks);
                let combined = combine(
                    &losses,
                    model.config.loss_mode,
                    model.weights.as_ref(),
                    &tape,
                    &model.store,
                )?;
                let total = combined.total.value().item();
                if !total.is_finite() {
                    return Err(Error::Diverged(diagnostic(epoch, step, batch, train, &combined.terms)));
                }
                (tape.backward(combined.total)?, combined.terms)
            };
            adam.update(&mut model.store, &grads);
            if let Some(w) = &model.weights {
                w.clamp(&mut model.store);
            }
            if sums.is_empty() {
                sums = terms;
            } else {
                for (s, t) in sums.iter_mut().zip(&terms) {
                    s.raw += t.raw;
                    s.sigma += t.sigma;
                    s.weighted += t.weighted;
                }
            }
            batches += 1;
        }
        for s in &mut sums {
            s.raw /= batches as f64;
            s.sigma /= batches as f64;
            s.weighted /= batches as f64;
            writeln!(log, "epoch={epoch} {}", s.key_values())?;
        }
        if let Some(w) = &model.weights {
            writeln!(log, "epoch={epoch} sigma_clamps={}", w.clamp_count())?;
        }
        let mut record = EpochRecord {
            epoch,
            losses: sums,
            dev: None,
        };
        if !dev.is_empty() && epoch % config.eval_every == 0 {
            let scores = dev_scores(&model, dev)?;
            let mut line = format!("epoch={epoch} dev_lf={:.4}", scores.main);
            if let Some(h) = scores.budget_h {
                line.push_str(&format!(" dev_h_lf={h:.4}"));
            }
            if let Some(b) = scores.budget_b {
                line.push_str(&format!(" dev_b_lf={b:.4}"));
            }
            writeln!(log, "{line}")?;
            let decision = stopping.observe(&scores.tracked());
            if decision.main_improved {
                snapshot = Some((epoch, model.store.clone(), scores.clone()));
            }
            record.dev = Some(scores.clone());
            history.push(record);
            let reached = config.target_lf.is_some_and(|t| scores.main >= t);
            if decision.stop || reached {
                stopped_early = decision.stop;
                break;
            }
        } else {
            history.push(record);
        }
    }
    let (best_epoch, best) = match snapshot {
        Some((epoch, store, scores)) => {
            model.store.assign_from(&store)?;
            (epoch, Some(scores))
        }
        None => (epochs, None),
    };
    writeln!(
        log,
        "best_epoch={best_epoch} epochs={epochs} stopped_early={stopped_early}"
    )?;
    Ok(TrainOutcome {
        model,
        epochs,
        best_epoch,
        best,
        history,
        stopped_early,
    })
}

fn diagnostic(epoch: usize, step: u64, batch: &[usize], train: &[DepGraph], terms: &[LossTerm]) -> String {
    let mut s = format!("non-finite loss at epoch={epoch} step={step}");
    for t in terms {
        s.push_str(&format!("; {}", t.key_values()));
    }
    for &k in batch {
        let forms: Vec<&str> = train[k].tokens.iter().map(|t| t.form.as_str()).collect();
        s.push_str(&format!("; sentence={k} tokens=\"{}\"", forms.join(" ")));
    }
    s
}
