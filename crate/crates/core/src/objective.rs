//! Task losses and their combination.
//!
//! Losses are accumulated as sums with element counts so that a batch of
//! sentences yields one mean per task over all of its elements.

use std::cell::Cell;

use sdp_tensor::{ParamId, ParamStore, Tape, Tensor, Var};

use crate::config::{LossMode, Task, TaskSet};
use crate::error::{Error, Result};
use crate::graph::DepGraph;
use crate::init::Init;
use crate::scorer::AuxOutputs;
use crate::targets::AuxTargets;
use crate::vocab::Vocabulary;

/// Summed BCE of the arc logits against the gold graph, and the number of
/// scored pairs `(i, j)` with `i ∈ 0..=n`, `j ∈ 1..=n`, `i ≠ j`.
pub fn arc_loss_sum<'t>(arc: Var<'t>, gold: &DepGraph) -> Result<(Var<'t>, usize)> {
    let n = gold.len();
    expect_shape(&arc, &[n, n + 1], "arc scores")?;
    let mut targets = vec![0.0; n * (n + 1)];
    let mut weights = vec![1.0; n * (n + 1)];
    for j in 1..=n {
        weights[(j - 1) * (n + 1) + j] = 0.0;
    }
    for a in gold.arcs() {
        targets[(a.dep - 1) * (n + 1) + a.head] = 1.0;
    }
    Ok((arc.bce_with_logits_sum(&targets, &weights)?, n * n))
}

/// Mean BCE over the candidate arcs of one sentence.
pub fn arc_loss<'t>(arc: Var<'t>, gold: &DepGraph) -> Result<Var<'t>> {
    let (sum, count) = arc_loss_sum(arc, gold)?;
    Ok(sum.scale(1.0 / count as f64))
}

/// Summed label cross-entropy over the gold arcs, and their number.
pub fn label_loss_sum<'t>(label: Var<'t>, gold: &DepGraph, vocab: &Vocabulary) -> Result<(Option<Var<'t>>, usize)> {
    let n = gold.len();
    let labels = vocab.labels.len();
    expect_shape(&label, &[n * labels, n + 1], "label scores")?;
    let mut bases = Vec::with_capacity(gold.arcs().len());
    let mut targets = Vec::with_capacity(gold.arcs().len());
    for a in gold.arcs() {
        let l = vocab
            .labels
            .get(&a.label)
            .ok_or_else(|| Error::Data(format!("label {:?} not in vocabulary", a.label)))?;
        bases.push((a.dep - 1) * labels * (n + 1) + a.head);
        targets.push(l);
    }
    if bases.is_empty() {
        return Ok((None, 0));
    }
    let sum = label.cross_entropy_strided_sum(&bases, n + 1, labels, &targets)?;
    Ok((Some(sum), bases.len()))
}

/// Mean label cross-entropy over gold arcs; 0 when there are none.
pub fn label_loss<'t>(label: Var<'t>, gold: &DepGraph, vocab: &Vocabulary) -> Result<Var<'t>> {
    let (sum, count) = label_loss_sum(label, gold, vocab)?;
    Ok(match sum {
        Some(s) => s.scale(1.0 / count as f64),
        None => label.tape().scalar(0.0),
    })
}

/// Summed squared error of an `n × 1` prediction.
pub fn count_loss_sum<'t>(pred: Var<'t>, targets: &[f64]) -> Result<(Var<'t>, usize)> {
    expect_shape(&pred, &[targets.len(), 1], "count predictions")?;
    let gold = pred
        .tape()
        .constant(Tensor::new(vec![targets.len(), 1], targets.to_vec())?);
    Ok((pred.sub(gold)?.square().sum(), targets.len()))
}

/// Summed cross-entropy over tokens whose multiset has a class.
pub fn multiset_loss_sum<'t>(logits: Var<'t>, classes: &[Option<usize>]) -> Result<(Option<Var<'t>>, usize)> {
    let (rows, targets): (Vec<usize>, Vec<usize>) = classes
        .iter()
        .enumerate()
        .filter_map(|(j, c)| c.map(|c| (j, c)))
        .unzip();
    if rows.is_empty() {
        return Ok((None, 0));
    }
    Ok((Some(logits.cross_entropy_rows_sum(&rows, &targets)?), rows.len()))
}

/// Summed squared distance between predicted and gold bag-of-label vectors,
/// and the number of tokens.
pub fn bol_loss_sum<'t>(pred: Var<'t>, targets: &[Vec<f64>]) -> Result<(Var<'t>, usize)> {
    let n = targets.len();
    let labels = targets.first().map_or(0, Vec::len);
    expect_shape(&pred, &[n, labels], "bag-of-label predictions")?;
    let flat: Vec<f64> = targets.iter().flatten().copied().collect();
    let gold = pred.tape().constant(Tensor::new(vec![n, labels], flat)?);
    Ok((pred.sub(gold)?.square().sum(), n))
}

fn expect_shape(v: &Var<'_>, shape: &[usize], what: &str) -> Result<()> {
    if v.shape() != shape {
        return Err(Error::Contract(format!(
            "{what} have shape {:?}, expected {shape:?}",
            v.shape()
        )));
    }
    Ok(())
}

/// Per-task sums and counts gathered over a batch.
pub struct LossAccumulator<'t> {
    tape: &'t Tape,
    sums: [Option<Var<'t>>; 6],
    counts: [usize; 6],
}

impl<'t> LossAccumulator<'t> {
    pub fn new(tape: &'t Tape) -> Self {
        LossAccumulator {
            tape,
            sums: [None; 6],
            counts: [0; 6],
        }
    }

    pub fn add(&mut self, task: Task, sum: Option<Var<'t>>, count: usize) -> Result<()> {
        let k = task.index();
        if let Some(s) = sum {
            self.sums[k] = Some(match self.sums[k] {
                Some(prev) => prev.add(s)?,
                None => s,
            });
        }
        self.counts[k] += count;
        Ok(())
    }

    /// Adds the main and auxiliary losses of one sentence.
    #[allow(clippy::too_many_arguments)]
    pub fn add_sentence(
        &mut self,
        tasks: TaskSet,
        arc: Var<'t>,
        label: Var<'t>,
        aux: Option<&AuxOutputs<'t>>,
        gold: &DepGraph,
        targets: &[AuxTargets],
        vocab: &Vocabulary,
    ) -> Result<()> {
        let (s, c) = arc_loss_sum(arc, gold)?;
        self.add(Task::A, Some(s), c)?;
        let (s, c) = label_loss_sum(label, gold, vocab)?;
        self.add(Task::L, s, c)?;
        if !tasks.has_aux() {
            return Ok(());
        }
        let aux = aux.ok_or_else(|| Error::Contract("auxiliary outputs missing".into()))?;
        let missing = |t: Task| Error::Contract(format!("task {} has no output", t.name()));
        for task in tasks.iter() {
            match task {
                Task::A | Task::L => {}
                Task::H => {
                    let y: Vec<f64> = targets.iter().map(|t| t.nbh_t).collect();
                    let (s, c) = count_loss_sum(aux.nbh.ok_or_else(|| missing(task))?, &y)?;
                    self.add(task, Some(s), c)?;
                }
                Task::D => {
                    let y: Vec<f64> = targets.iter().map(|t| t.nbd_t).collect();
                    let (s, c) = count_loss_sum(aux.nbd.ok_or_else(|| missing(task))?, &y)?;
                    self.add(task, Some(s), c)?;
                }
                Task::S => {
                    let y: Vec<Option<usize>> = targets.iter().map(|t| t.multiset_class).collect();
                    let (s, c) = multiset_loss_sum(aux.multiset.ok_or_else(|| missing(task))?, &y)?;
                    self.add(task, s, c)?;
                }
                Task::B => {
                    let y: Vec<Vec<f64>> = targets.iter().map(|t| t.bol_t.clone()).collect();
                    let (s, c) = bol_loss_sum(aux.bol.ok_or_else(|| missing(task))?, &y)?;
                    self.add(task, Some(s), c)?;
                }
            }
        }
        Ok(())
    }

    /// Means per task; a task with no elements contributes 0.
    pub fn finish(self, tasks: TaskSet) -> TaskLosses<'t> {
        let mut values = Vec::new();
        for t in tasks.iter() {
            let k = t.index();
            let v = match self.sums[k] {
                Some(s) if self.counts[k] > 0 => s.scale(1.0 / self.counts[k] as f64),
                _ => self.tape.scalar(0.0),
            };
            values.push((t, v));
        }
        TaskLosses { values }
    }
}

/// One scalar loss per active task.
pub struct TaskLosses<'t> {
    values: Vec<(Task, Var<'t>)>,
}

impl<'t> TaskLosses<'t> {
    pub fn new(values: Vec<(Task, Var<'t>)>) -> Self {
        TaskLosses { values }
    }

    pub fn get(&self, task: Task) -> Option<Var<'t>> {
        self.values.iter().find(|(t, _)| *t == task).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Task, Var<'t>)> + '_ {
        self.values.iter().copied()
    }
}

/// Learned per-task uncertainty, stored as `ln σ_t`.
#[derive(Debug)]
pub struct UncertaintyWeights {
    ids: Vec<(Task, ParamId)>,
    floor: f64,
    clamps: Cell<usize>,
}

impl Clone for UncertaintyWeights {
    fn clone(&self) -> Self {
        UncertaintyWeights {
            ids: self.ids.clone(),
            floor: self.floor,
            clamps: Cell::new(self.clamps.get()),
        }
    }
}

impl UncertaintyWeights {
    /// Registers `sigma.<task>` for every active task, with σ = 1.
    pub fn new(init: &mut Init, tasks: TaskSet, floor: f64) -> Result<Self> {
        let mut ids = Vec::new();
        for t in tasks.iter() {
            ids.push((t, init.constant(&format!("sigma.{}", t.name()), &[], 0.0)?));
        }
        Ok(UncertaintyWeights {
            ids,
            floor,
            clamps: Cell::new(0),
        })
    }

    pub fn param(&self, task: Task) -> Option<ParamId> {
        self.ids.iter().find(|(t, _)| *t == task).map(|(_, id)| *id)
    }

    pub fn sigma(&self, store: &ParamStore, task: Task) -> Option<f64> {
        self.param(task).map(|id| store.get(id).item().exp())
    }

    pub fn tasks(&self) -> impl Iterator<Item = Task> + '_ {
        self.ids.iter().map(|(t, _)| *t)
    }

    /// Total number of clamping events so far.
    pub fn clamp_count(&self) -> usize {
        self.clamps.get()
    }

    /// Raises any σ below the floor back to it; returns how many were.
    pub fn clamp(&self, store: &mut ParamStore) -> usize {
        let min = self.floor.ln();
        let mut n = 0;
        for &(_, id) in &self.ids {
            let v = store.get_mut(id);
            // Also resets NaN.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(v.data()[0] >= min) {
                v.data_mut()[0] = min;
                n += 1;
            }
        }
        self.clamps.set(self.clamps.get() + n);
        n
    }

    fn log_sigma<'t>(&self, tape: &'t Tape, store: &ParamStore, id: ParamId) -> Var<'t> {
        let min = self.floor.ln();
        if store.get(id).item() < min {
            self.clamps.set(self.clamps.get() + 1);
            tape.scalar(min)
        } else {
            tape.param(store, id)
        }
    }
}

/// One task's contribution to the total, for logging.
#[derive(Clone, Debug, PartialEq)]
pub struct LossTerm {
    pub task: Task,
    pub raw: f64,
    pub sigma: f64,
    pub weighted: f64,
}

impl LossTerm {
    pub fn key_values(&self) -> String {
        format!(
            "task={} raw={:.6} sigma={:.6} weighted={:.6}",
            self.task.name(),
            self.raw,
            self.sigma,
            self.weighted
        )
    }
}

pub struct Combined<'t> {
    pub total: Var<'t>,
    pub terms: Vec<LossTerm>,
}

/// Uncertainty mode: `Σ_t L_t / σ_t² + ln σ_t`. Plain-sum mode: `Σ_t L_t`.
pub fn combine<'t>(
    losses: &TaskLosses<'t>,
    mode: LossMode,
    weights: Option<&UncertaintyWeights>,
    tape: &'t Tape,
    store: &ParamStore,
) -> Result<Combined<'t>> {
    let mut total: Option<Var<'t>> = None;
    let mut terms = Vec::new();
    for (task, loss) in losses.iter() {
        let (term, sigma) = match mode {
            LossMode::PlainSum => (loss, 1.0),
            LossMode::Uncertainty => {
                let w = weights.ok_or_else(|| Error::Contract("uncertainty weights missing".into()))?;
                let id = w
                    .param(task)
                    .ok_or_else(|| Error::Contract(format!("no uncertainty weight for task {}", task.name())))?;
                let log_sigma = w.log_sigma(tape, store, id);
                let precision = log_sigma.scale(-2.0).exp();
                (loss.mul(precision)?.add(log_sigma)?, log_sigma.value().item().exp())
            }
        };
        terms.push(LossTerm {
            task,
            raw: loss.value().item(),
            sigma,
            weighted: term.value().item(),
        });
        total = Some(match total {
            Some(t) => t.add(term)?,
            None => term,
        });
    }
    Ok(Combined {
        total: total.unwrap_or_else(|| tape.scalar(0.0)),
        terms,
    })
}
