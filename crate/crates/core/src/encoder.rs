//! Token embeddings and the bidirectional LSTM encoder.

use std::collections::HashMap;

use rand::{Rng, RngCore};
use sdp_tensor::{ParamId, ParamStore, Tape, Tensor, Var};

use crate::config::{EmbeddingMode, EncoderConfig, RootMode};
use crate::error::{Error, Result};
use crate::graph::DepGraph;
use crate::init::Init;
use crate::vocab::{Vocabulary, DROP, ROOT};

const LSTM_INIT: f64 = 0.1;
const EMBED_INIT: f64 = 0.1;

/// Vocabulary ids of the lexical inputs of one sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexicalIds {
    pub word: Vec<usize>,
    pub lemma: Vec<usize>,
    pub pos: Vec<usize>,
}

/// Maps tokens to ids; in train mode each token is replaced by *DROP* with
/// probability `drop` (one draw per token, shared by word, lemma and pos).
/// With `root_token`, position 0 holds the root symbol.
pub fn lexical_ids(
    graph: &DepGraph,
    vocab: &Vocabulary,
    mode: EmbeddingMode,
    root_token: bool,
    train: bool,
    drop: f64,
    rng: &mut dyn RngCore,
) -> Result<LexicalIds> {
    let cap = graph.len() + root_token as usize;
    let mut ids = LexicalIds {
        word: Vec::with_capacity(cap),
        lemma: Vec::with_capacity(cap),
        pos: Vec::with_capacity(cap),
    };
    if root_token {
        ids.word.push(ROOT);
        ids.lemma.push(ROOT);
        ids.pos.push(ROOT);
    }
    for t in &graph.tokens {
        let (mut w, mut l, mut p) = (vocab.form_id(&t.form), 0, 0);
        if mode == EmbeddingMode::WordLemmaPos {
            let lemma = t
                .lemma
                .as_deref()
                .ok_or_else(|| Error::Data(format!("token {} ({}) has no lemma", t.index, t.form)))?;
            let pos = t
                .pos
                .as_deref()
                .ok_or_else(|| Error::Data(format!("token {} ({}) has no POS tag", t.index, t.form)))?;
            l = vocab.lemma_id(lemma);
            p = vocab.pos_id(pos);
        }
        if train && drop > 0.0 && rng.gen_bool(drop.min(1.0)) {
            (w, l, p) = (DROP, DROP, DROP);
        }
        ids.word.push(w);
        ids.lemma.push(l);
        ids.pos.push(p);
    }
    Ok(ids)
}

#[derive(Clone, Debug)]
struct LstmDirection {
    w: ParamId,
    u: ParamId,
    b: ParamId,
}

#[derive(Clone, Debug)]
struct LstmLayer {
    fwd: LstmDirection,
    bwd: LstmDirection,
}

/// Which embedding table a pretrained file initializes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Table {
    Word,
    Lemma,
}

#[derive(Clone, Debug)]
pub struct Encoder {
    config: EncoderConfig,
    word: ParamId,
    lemma: Option<ParamId>,
    pos: Option<ParamId>,
    /// Learned recurrent vector of the root node, in learned-root mode.
    root: Option<ParamId>,
    layers: Vec<LstmLayer>,
}

/// Recurrent representations of one sentence.
pub struct Encoded<'t> {
    /// Rows `0..=n`: the root node followed by the tokens.
    pub nodes: Var<'t>,
    /// Rows `0..n`: tokens `1..=n`.
    pub tokens: Var<'t>,
}

impl Encoder {
    pub fn new(config: &EncoderConfig, vocab: &Vocabulary, init: &mut Init) -> Result<Self> {
        let word = init.uniform("embed.word", &[vocab.forms.len(), config.word_dim], EMBED_INIT)?;
        let (lemma, pos) = match config.mode {
            EmbeddingMode::Word => (None, None),
            EmbeddingMode::WordLemmaPos => (
                Some(init.uniform("embed.lemma", &[vocab.lemmas.len(), config.lemma_dim], EMBED_INIT)?),
                Some(init.uniform("embed.pos", &[vocab.pos.len(), config.pos_dim], EMBED_INIT)?),
            ),
        };
        let h = config.lstm_hidden;
        let root = match config.root_mode {
            RootMode::Learned => Some(init.uniform("encoder.root", &[1, 2 * h], LSTM_INIT)?),
            RootMode::Token => None,
        };
        let mut layers = Vec::with_capacity(config.lstm_layers);
        let mut input = config.input_width();
        for k in 0..config.lstm_layers {
            let mut dir = |name: &str| -> Result<LstmDirection> {
                let p = format!("lstm.{k}.{name}");
                let mut bias = vec![0.0; 4 * h];
                bias[h..2 * h].iter_mut().for_each(|x| *x = 1.0);
                Ok(LstmDirection {
                    w: init.uniform(&format!("{p}.w"), &[input, 4 * h], LSTM_INIT)?,
                    u: init.uniform(&format!("{p}.u"), &[h, 4 * h], LSTM_INIT)?,
                    b: init.store.add(format!("{p}.b"), Tensor::new(vec![1, 4 * h], bias)?)?,
                })
            };
            layers.push(LstmLayer {
                fwd: dir("fwd")?,
                bwd: dir("bwd")?,
            });
            input = 2 * h;
        }
        Ok(Encoder {
            config: config.clone(),
            word,
            lemma,
            pos,
            root,
            layers,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    /// Copies pretrained vectors into rows of an embedding table; returns
    /// how many rows were set.
    pub fn load_pretrained(
        &self,
        store: &mut ParamStore,
        vocab: &Vocabulary,
        table: Table,
        vectors: &HashMap<String, Vec<f64>>,
    ) -> Result<usize> {
        let (id, interner) = match table {
            Table::Word => (self.word, &vocab.forms),
            Table::Lemma => (
                self.lemma
                    .ok_or_else(|| Error::Config("no lemma table in word-only mode".into()))?,
                &vocab.lemmas,
            ),
        };
        let t = store.get_mut(id);
        let width = t.cols();
        let mut set = 0;
        for (row, name) in interner.iter().enumerate() {
            if let Some(v) = vectors.get(name) {
                if v.len() != width {
                    return Err(Error::Data(format!(
                        "pretrained vector for {name:?} has width {}, table width is {width}",
                        v.len()
                    )));
                }
                t.data_mut()[row * width..(row + 1) * width].copy_from_slice(v);
                set += 1;
            }
        }
        Ok(set)
    }

    /// Builds the input vectors `v`: contextual ⊕ word ⊕ lemma ⊕ pos.
    pub fn embed<'t>(&self, tape: &'t Tape, store: &ParamStore, graph: &DepGraph, ids: &LexicalIds) -> Result<Var<'t>> {
        let root_token = self.config.root_mode == RootMode::Token;
        let m = ids.word.len();
        if m != graph.len() + root_token as usize {
            return Err(Error::Contract("lexical ids do not match the sentence".into()));
        }
        let mut parts = Vec::with_capacity(4);
        let cdim = self.config.contextual_dim;
        if cdim > 0 {
            let mut data = Vec::with_capacity(m * cdim);
            if root_token {
                match &graph.root_contextual {
                    Some(v) if v.len() == cdim => data.extend_from_slice(v),
                    Some(v) => {
                        return Err(Error::Data(format!(
                            "root contextual vector has width {}, expected {cdim}",
                            v.len()
                        )))
                    }
                    None => data.extend(std::iter::repeat_n(0.0, cdim)),
                }
            }
            for t in &graph.tokens {
                let v = t
                    .contextual
                    .as_ref()
                    .ok_or_else(|| Error::Data(format!("token {} ({}) has no contextual vector", t.index, t.form)))?;
                if v.len() != cdim {
                    return Err(Error::Data(format!(
                        "contextual vector of token {} has width {}, expected {cdim}",
                        t.index,
                        v.len()
                    )));
                }
                data.extend_from_slice(v);
            }
            parts.push(tape.constant(Tensor::new(vec![m, cdim], data)?));
        }
        parts.push(tape.param(store, self.word).gather_rows(&ids.word)?);
        if let (Some(lemma), Some(pos)) = (self.lemma, self.pos) {
            parts.push(tape.param(store, lemma).gather_rows(&ids.lemma)?);
            parts.push(tape.param(store, pos).gather_rows(&ids.pos)?);
        }
        Ok(if parts.len() == 1 {
            parts[0]
        } else {
            Var::concat(&parts)?
        })
    }

    /// Runs the stacked biLSTM over `v` (`m × input_width`).
    pub fn encode<'t>(
        &self,
        tape: &'t Tape,
        store: &ParamStore,
        v: Var<'t>,
        train: bool,
        rng: &mut dyn RngCore,
    ) -> Result<Var<'t>> {
        let mut x = v;
        for (k, layer) in self.layers.iter().enumerate() {
            if k > 0 {
                x = x.dropout(self.config.lstm_dropout, train, rng)?;
            }
            let f = self.run_direction(tape, store, &layer.fwd, x, false)?;
            let b = self.run_direction(tape, store, &layer.bwd, x, true)?;
            x = Var::concat(&[f, b])?;
        }
        Ok(x)
    }

    fn run_direction<'t>(
        &self,
        tape: &'t Tape,
        store: &ParamStore,
        dir: &LstmDirection,
        x: Var<'t>,
        reverse: bool,
    ) -> Result<Var<'t>> {
        let h = self.config.lstm_hidden;
        let m = x.shape()[0];
        let xw = x
            .matmul(tape.param(store, dir.w))?
            .add_broadcast(tape.param(store, dir.b))?;
        let u = tape.param(store, dir.u);
        let mut outputs: Vec<Option<Var<'t>>> = vec![None; m];
        let mut state: Option<(Var<'t>, Var<'t>)> = None;
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..m).rev())
        } else {
            Box::new(0..m)
        };
        for t in order {
            let mut gates = xw.gather_rows(&[t])?;
            if let Some((h_prev, _)) = state {
                gates = gates.add(h_prev.matmul(u)?)?;
            }
            let i = gates.slice_cols(0, h)?.sigmoid();
            let f = gates.slice_cols(h, 2 * h)?.sigmoid();
            let g = gates.slice_cols(2 * h, 3 * h)?.tanh();
            let o = gates.slice_cols(3 * h, 4 * h)?.sigmoid();
            let mut c = i.mul(g)?;
            if let Some((_, c_prev)) = state {
                c = c.add(f.mul(c_prev)?)?;
            }
            let h_t = o.mul(c.tanh())?;
            outputs[t] = Some(h_t);
            state = Some((h_t, c));
        }
        let rows: Vec<Var<'t>> = outputs.into_iter().map(|o| o.expect("every step runs")).collect();
        Ok(Var::vcat(&rows)?)
    }

    /// Embeds and encodes a sentence, returning root and token rows.
    pub fn forward<'t>(
        &self,
        tape: &'t Tape,
        store: &ParamStore,
        graph: &DepGraph,
        vocab: &Vocabulary,
        train: bool,
        rng: &mut dyn RngCore,
    ) -> Result<Encoded<'t>> {
        if graph.is_empty() {
            return Err(Error::Data("cannot encode an empty sentence".into()));
        }
        let root_token = self.config.root_mode == RootMode::Token;
        let ids = lexical_ids(
            graph,
            vocab,
            self.config.mode,
            root_token,
            train,
            self.config.lexical_drop,
            rng,
        )?;
        let v = self.embed(tape, store, graph, &ids)?;
        let r = self.encode(tape, store, v, train, rng)?;
        let n = graph.len();
        Ok(match self.root {
            Some(root) => Encoded {
                nodes: Var::vcat(&[tape.param(store, root), r])?,
                tokens: r,
            },
            None => Encoded {
                nodes: r,
                tokens: r.gather_rows(&(1..=n).collect::<Vec<_>>())?,
            },
        })
    }
}
