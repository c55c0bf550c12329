//! Specialization MLPs, biaffine arc and label scorers, auxiliary heads and
//! stack propagation.

use rand::RngCore;
use sdp_tensor::{ParamId, ParamStore, Tape, Var};

use crate::config::{ScorerConfig, StackPropConfig};
use crate::encoder::Encoded;
use crate::error::{Error, Result};
use crate::init::Init;

#[derive(Clone, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    pub fn new(init: &mut Init, name: &str, input: usize, output: usize) -> Result<Self> {
        Ok(Linear {
            w: init.glorot(&format!("{name}.w"), input, output)?,
            b: init.constant(&format!("{name}.b"), &[1, output], 0.0)?,
        })
    }

    pub fn forward<'t>(&self, tape: &'t Tape, store: &ParamStore, x: Var<'t>) -> Result<Var<'t>> {
        Ok(x.matmul(tape.param(store, self.w))?
            .add_broadcast(tape.param(store, self.b))?)
    }
}

/// Stack of ReLU layers, each followed by dropout.
#[derive(Clone, Debug)]
pub struct Mlp {
    layers: Vec<Linear>,
    dropout: f64,
}

impl Mlp {
    pub fn new(init: &mut Init, name: &str, input: usize, widths: &[usize], dropout: f64) -> Result<Self> {
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = input;
        for (k, &w) in widths.iter().enumerate() {
            layers.push(Linear::new(init, &format!("{name}.{k}"), prev, w)?);
            prev = w;
        }
        Ok(Mlp { layers, dropout })
    }

    pub fn forward<'t>(
        &self,
        tape: &'t Tape,
        store: &ParamStore,
        x: Var<'t>,
        train: bool,
        rng: &mut dyn RngCore,
    ) -> Result<Var<'t>> {
        let mut x = x;
        for layer in &self.layers {
            x = layer
                .forward(tape, store, x)?
                .relu()
                .dropout(self.dropout, train, rng)?;
        }
        Ok(x)
    }
}

/// Outputs of the four specialization MLPs.
pub struct Specialized<'t> {
    /// `(n+1) × d`, row 0 is the root.
    pub arc_head: Var<'t>,
    /// `n × d`.
    pub arc_dep: Var<'t>,
    pub lab_head: Var<'t>,
    pub lab_dep: Var<'t>,
}

#[derive(Clone, Debug)]
pub struct Scorer {
    arc_head: Mlp,
    arc_dep: Mlp,
    lab_head: Mlp,
    lab_dep: Mlp,
    /// `dep_width × head_width`; the dep side includes the stack-propagated block.
    pub arc_u: ParamId,
    /// Shape `[1]`.
    pub arc_b: ParamId,
    /// `dep_width × (labels · head_width)`: label `l` owns columns
    /// `l·head_width .. (l+1)·head_width`.
    pub label_u: ParamId,
    /// Shape `[labels]`.
    pub label_b: ParamId,
    labels: usize,
    stack: StackPropConfig,
}

impl Scorer {
    pub fn new(
        init: &mut Init,
        config: &ScorerConfig,
        stack: &StackPropConfig,
        input: usize,
        labels: usize,
    ) -> Result<Self> {
        let (a, l, p) = (config.arc_mlp, config.label_mlp, config.mlp_dropout);
        let arc_dep_width = a + if stack.h { config.aux_hidden } else { 0 };
        let lab_dep_width = l + if stack.b { config.aux_hidden } else { 0 };
        Ok(Scorer {
            arc_head: Mlp::new(init, "mlp.arc_head", input, &[a, a], p)?,
            arc_dep: Mlp::new(init, "mlp.arc_dep", input, &[a, a], p)?,
            lab_head: Mlp::new(init, "mlp.lab_head", input, &[l, l], p)?,
            lab_dep: Mlp::new(init, "mlp.lab_dep", input, &[l, l], p)?,
            arc_u: init.glorot("biaffine.arc.u", arc_dep_width, a)?,
            arc_b: init.constant("biaffine.arc.b", &[1], 0.0)?,
            label_u: init.glorot("biaffine.label.u", lab_dep_width, labels * l)?,
            label_b: init.constant("biaffine.label.b", &[labels], 0.0)?,
            labels,
            stack: stack.clone(),
        })
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn specialize<'t>(
        &self,
        tape: &'t Tape,
        store: &ParamStore,
        enc: &Encoded<'t>,
        train: bool,
        rng: &mut dyn RngCore,
    ) -> Result<Specialized<'t>> {
        Ok(Specialized {
            arc_head: self.arc_head.forward(tape, store, enc.nodes, train, rng)?,
            arc_dep: self.arc_dep.forward(tape, store, enc.tokens, train, rng)?,
            lab_head: self.lab_head.forward(tape, store, enc.nodes, train, rng)?,
            lab_dep: self.lab_dep.forward(tape, store, enc.tokens, train, rng)?,
        })
    }

    fn augment<'t>(dep: Var<'t>, enabled: bool, c: f64, hidden: Option<Var<'t>>, task: &str) -> Result<Var<'t>> {
        if !enabled {
            return Ok(dep);
        }
        let hidden = hidden
            .ok_or_else(|| Error::Contract(format!("stack propagation through {task} needs its hidden layer")))?;
        Ok(Var::concat(&[dep, hidden.scale(c)])?)
    }

    /// `n × (n+1)` matrix; entry `[j−1][i]` scores the arc `i → j`.
    /// Self-arc cells are computed but carry no meaning; they are masked
    /// by the loss and the decoders.
    pub fn arc_scores<'t>(
        &self,
        tape: &'t Tape,
        store: &ParamStore,
        spec: &Specialized<'t>,
        hidden_h: Option<Var<'t>>,
    ) -> Result<Var<'t>> {
        let dep = Self::augment(spec.arc_dep, self.stack.h, self.stack.c_h, hidden_h, "H")?;
        let s = dep
            .matmul(tape.param(store, self.arc_u))?
            .matmul(spec.arc_head.transpose()?)?;
        Ok(s.add_broadcast(tape.param(store, self.arc_b))?)
    }

    /// `(n·L) × (n+1)` matrix; entry `[(j−1)·L + l][i]` scores label `l`
    /// on the arc `i → j`.
    pub fn label_scores<'t>(
        &self,
        tape: &'t Tape,
        store: &ParamStore,
        spec: &Specialized<'t>,
        hidden_b: Option<Var<'t>>,
    ) -> Result<Var<'t>> {
        let dep = Self::augment(spec.lab_dep, self.stack.b, self.stack.c_b, hidden_b, "B")?;
        let n = dep.shape()[0];
        let width = spec.lab_head.shape()[1];
        let s = dep
            .matmul(tape.param(store, self.label_u))?
            .reshape(&[n * self.labels, width])?
            .matmul(spec.lab_head.transpose()?)?;
        let bias = tape
            .param(store, self.label_b)
            .reshape(&[self.labels, 1])?
            .tile_rows(n)?;
        Ok(s.add_broadcast(bias)?)
    }
}

/// Two hidden ReLU layers and a linear task output.
#[derive(Clone, Debug)]
pub struct AuxHead {
    mlp: Mlp,
    out: Linear,
}

impl AuxHead {
    pub fn new(init: &mut Init, name: &str, input: usize, config: &ScorerConfig, output: usize) -> Result<Self> {
        let h = config.aux_hidden;
        Ok(AuxHead {
            mlp: Mlp::new(init, name, input, &[h, h], config.aux_dropout)?,
            out: Linear::new(init, &format!("{name}.out"), h, output)?,
        })
    }

    /// Returns `(last hidden layer, output)`.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape,
        store: &ParamStore,
        r: Var<'t>,
        train: bool,
        rng: &mut dyn RngCore,
    ) -> Result<(Var<'t>, Var<'t>)> {
        let hidden = self.mlp.forward(tape, store, r, train, rng)?;
        let out = self.out.forward(tape, store, hidden)?;
        Ok((hidden, out))
    }
}

#[derive(Clone, Debug, Default)]
pub struct AuxHeads {
    pub h: Option<AuxHead>,
    pub d: Option<AuxHead>,
    pub s: Option<AuxHead>,
    pub b: Option<AuxHead>,
}

/// Per-token outputs of the active auxiliary heads.
#[derive(Clone, Copy, Default)]
pub struct AuxOutputs<'t> {
    /// `n × 1` transformed governor counts.
    pub nbh: Option<Var<'t>>,
    /// `n × 1` transformed dependent counts.
    pub nbd: Option<Var<'t>>,
    /// `n × |multisets|` logits.
    pub multiset: Option<Var<'t>>,
    /// `n × |L|` transformed per-label counts.
    pub bol: Option<Var<'t>>,
    pub hidden_h: Option<Var<'t>>,
    pub hidden_b: Option<Var<'t>>,
}

impl AuxHeads {
    pub fn is_empty(&self) -> bool {
        self.h.is_none() && self.d.is_none() && self.s.is_none() && self.b.is_none()
    }

    pub fn forward<'t>(
        &self,
        tape: &'t Tape,
        store: &ParamStore,
        r: Var<'t>,
        train: bool,
        rng: &mut dyn RngCore,
    ) -> Result<AuxOutputs<'t>> {
        let mut out = AuxOutputs::default();
        if let Some(h) = &self.h {
            let (hidden, y) = h.forward(tape, store, r, train, rng)?;
            out.hidden_h = Some(hidden);
            out.nbh = Some(y);
        }
        if let Some(d) = &self.d {
            out.nbd = Some(d.forward(tape, store, r, train, rng)?.1);
        }
        if let Some(s) = &self.s {
            out.multiset = Some(s.forward(tape, store, r, train, rng)?.1);
        }
        if let Some(b) = &self.b {
            let (hidden, y) = b.forward(tape, store, r, train, rng)?;
            out.hidden_b = Some(hidden);
            out.bol = Some(y);
        }
        Ok(out)
    }
}
