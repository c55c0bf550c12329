//! Model and training configuration, read from flat `key=value` text.
//!
//! Every hyperparameter has a named key. Lines starting with `#` are
//! comments. A `preset` key, when present, selects the starting point
//! (`tuned` or `frozen`) before the other keys are applied.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    /// Arc existence.
    A,
    /// Arc labels.
    L,
    /// Number of governors.
    H,
    /// Number of dependents.
    D,
    /// Incoming-label multiset.
    S,
    /// Bag of incoming labels.
    B,
}

impl Task {
    pub const ALL: [Task; 6] = [Task::A, Task::L, Task::H, Task::D, Task::S, Task::B];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        ["A", "L", "H", "D", "S", "B"][self.index()]
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown task {s:?}")))
    }
}

/// A subset of [`Task`]s.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct TaskSet(u8);

impl TaskSet {
    pub fn main() -> Self {
        TaskSet::of(&[Task::A, Task::L])
    }

    pub fn of(tasks: &[Task]) -> Self {
        let mut s = TaskSet(0);
        for &t in tasks {
            s.insert(t);
        }
        s
    }

    pub fn insert(&mut self, t: Task) {
        self.0 |= 1 << t.index();
    }

    pub fn contains(self, t: Task) -> bool {
        self.0 & (1 << t.index()) != 0
    }

    pub fn iter(self) -> impl Iterator<Item = Task> {
        Task::ALL.into_iter().filter(move |&t| self.contains(t))
    }

    pub fn has_aux(self) -> bool {
        self.iter().any(|t| !matches!(t, Task::A | Task::L))
    }
}

impl FromStr for TaskSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut set = TaskSet::default();
        for part in s.split([',', '+']).filter(|p| !p.trim().is_empty()) {
            set.insert(part.parse()?);
        }
        Ok(set)
    }
}

impl fmt::Display for TaskSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Task::name).collect();
        write!(f, "{}", names.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbeddingMode {
    /// Contextual vector and word embedding.
    Word,
    /// Contextual vector, word, lemma and POS embeddings.
    WordLemmaPos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootMode {
    /// The root's recurrent vector is a learned parameter.
    Learned,
    /// The root is an extra first position of the recurrent encoder.
    Token,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossMode {
    Uncertainty,
    PlainSum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderConfig {
    pub mode: EmbeddingMode,
    pub word_dim: usize,
    pub lemma_dim: usize,
    pub pos_dim: usize,
    /// Width of supplied contextual vectors; 0 disables them.
    pub contextual_dim: usize,
    pub lstm_layers: usize,
    pub lstm_hidden: usize,
    pub lstm_dropout: f64,
    pub lexical_drop: f64,
    pub root_mode: RootMode,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            mode: EmbeddingMode::Word,
            word_dim: 100,
            lemma_dim: 0,
            pos_dim: 0,
            contextual_dim: 0,
            lstm_layers: 3,
            lstm_hidden: 600,
            lstm_dropout: 0.33,
            lexical_drop: 0.4,
            root_mode: RootMode::Learned,
        }
    }
}

impl EncoderConfig {
    pub fn input_width(&self) -> usize {
        let lex = match self.mode {
            EmbeddingMode::Word => self.word_dim,
            EmbeddingMode::WordLemmaPos => self.word_dim + self.lemma_dim + self.pos_dim,
        };
        self.contextual_dim + lex
    }

    pub fn output_width(&self) -> usize {
        2 * self.lstm_hidden
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScorerConfig {
    /// Hidden and output width of the arc specialization MLPs.
    pub arc_mlp: usize,
    /// Hidden and output width of the label specialization MLPs.
    pub label_mlp: usize,
    pub mlp_dropout: f64,
    /// Width of both hidden layers of each auxiliary MLP.
    pub aux_hidden: usize,
    pub aux_dropout: f64,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            arc_mlp: 600,
            label_mlp: 600,
            mlp_dropout: 0.33,
            aux_hidden: 300,
            aux_dropout: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct StackPropConfig {
    pub h: bool,
    pub b: bool,
    pub c_h: f64,
    pub c_b: f64,
}

impl StackPropConfig {
    pub fn enabled(&self) -> bool {
        self.h || self.b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub scorer: ScorerConfig,
    pub tasks: TaskSet,
    pub stackprop: StackPropConfig,
    pub loss_mode: LossMode,
    pub sigma_floor: f64,
    pub min_count: usize,
    pub multiset_includes_root: bool,
    /// Seed for parameter initialization; training sets it from
    /// [`TrainConfig::seed`].
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            encoder: EncoderConfig::default(),
            scorer: ScorerConfig::default(),
            tasks: TaskSet::main(),
            stackprop: StackPropConfig {
                h: false,
                b: false,
                c_h: 1.0,
                c_b: 1.0,
            },
            loss_mode: LossMode::Uncertainty,
            sigma_floor: 1e-3,
            min_count: 1,
            multiset_includes_root: true,
            init_seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.tasks.contains(Task::A) || !self.tasks.contains(Task::L) {
            return Err(Error::Config("tasks A and L are always active".into()));
        }
        if self.stackprop.h && !self.tasks.contains(Task::H) {
            return Err(Error::Config("stack propagation through H requires task H".into()));
        }
        if self.stackprop.b && !self.tasks.contains(Task::B) {
            return Err(Error::Config("stack propagation through B requires task B".into()));
        }
        for (name, rate) in [
            ("lstm_dropout", self.encoder.lstm_dropout),
            ("lexical_drop", self.encoder.lexical_drop),
            ("mlp_dropout", self.scorer.mlp_dropout),
            ("aux_dropout", self.scorer.aux_dropout),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name}={rate} outside [0, 1]")));
            }
        }
        if self.encoder.lstm_layers == 0 || self.encoder.lstm_hidden == 0 {
            return Err(Error::Config("the recurrent encoder needs at least one layer".into()));
        }
        if self.encoder.input_width() == 0 {
            return Err(Error::Config("token input width is zero".into()));
        }
        if self.sigma_floor <= 0.0 {
            return Err(Error::Config("sigma_floor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    /// Seeds shuffling, dropout and initialization.
    pub seed: u64,
    /// Evaluate on dev every this many epochs.
    pub eval_every: usize,
    /// Consecutive evaluations with every tracked score below its best
    /// before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    /// Stop as soon as the main dev LF reaches this value.
    pub target_lf: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::tuned()
    }
}

impl TrainConfig {
    /// Fine-tuned contextual setting: word embeddings only, 600-wide
    /// specialization MLPs, learned loss weights.
    pub fn tuned() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            batch_size: 8,
            learning_rate: 2e-5,
            beta1: 0.9,
            beta2: 0.9,
            adam_eps: 1e-8,
            seed: 1,
            eval_every: 1,
            patience: 1,
            max_epochs: 100,
            target_lf: None,
        }
    }

    /// Frozen contextual setting with lemma and POS embeddings, smaller
    /// label MLPs and a plain sum of task losses.
    pub fn frozen() -> Self {
        let mut c = TrainConfig::tuned();
        c.model.encoder.mode = EmbeddingMode::WordLemmaPos;
        c.model.encoder.lemma_dim = 100;
        c.model.encoder.pos_dim = 100;
        c.model.scorer.arc_mlp = 500;
        c.model.scorer.label_mlp = 100;
        c.model.loss_mode = LossMode::PlainSum;
        c.learning_rate = 5e-4;
        c
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut config = match pairs.iter().find(|(k, _)| k == "preset") {
            None => TrainConfig::tuned(),
            Some((_, v)) if v == "tuned" => TrainConfig::tuned(),
            Some((_, v)) if v == "frozen" => TrainConfig::frozen(),
            Some((_, v)) => return Err(Error::Config(format!("unknown preset {v:?}"))),
        };
        for (k, v) in &pairs {
            if k != "preset" {
                config.set(k, v)?;
            }
        }
        config.model.validate()?;
        Ok(config)
    }

    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
        }
        let m = &mut self.model;
        let e = &mut m.encoder;
        let s = &mut m.scorer;
        match key {
            "tasks" => m.tasks = value.parse()?,
            "loss_mode" => {
                m.loss_mode = match value {
                    "uncertainty" => LossMode::Uncertainty,
                    "plain-sum" | "plain_sum" | "sum" => LossMode::PlainSum,
                    _ => return Err(Error::Config(format!("loss_mode: {value:?}"))),
                }
            }
            "stackprop" => {
                let set: TaskSet = if value == "none" {
                    TaskSet::default()
                } else {
                    value.parse()?
                };
                m.stackprop.h = set.contains(Task::H);
                m.stackprop.b = set.contains(Task::B);
                if set.iter().any(|t| !matches!(t, Task::H | Task::B)) {
                    return Err(Error::Config("stackprop accepts only H and B".into()));
                }
            }
            "c_h" => m.stackprop.c_h = num(key, value)?,
            "c_b" => m.stackprop.c_b = num(key, value)?,
            "sigma_floor" => m.sigma_floor = num(key, value)?,
            "min_count" => m.min_count = num(key, value)?,
            "multiset_includes_root" => m.multiset_includes_root = num(key, value)?,
            "embedding_mode" => {
                e.mode = match value {
                    "word" => EmbeddingMode::Word,
                    "word+lemma+pos" => EmbeddingMode::WordLemmaPos,
                    _ => return Err(Error::Config(format!("embedding_mode: {value:?}"))),
                }
            }
            "word_dim" => e.word_dim = num(key, value)?,
            "lemma_dim" => e.lemma_dim = num(key, value)?,
            "pos_dim" => e.pos_dim = num(key, value)?,
            "contextual_dim" => e.contextual_dim = num(key, value)?,
            "lstm_layers" => e.lstm_layers = num(key, value)?,
            "lstm_hidden" => e.lstm_hidden = num(key, value)?,
            "lstm_dropout" => e.lstm_dropout = num(key, value)?,
            "lexical_drop" => e.lexical_drop = num(key, value)?,
            "root_mode" => {
                e.root_mode = match value {
                    "learned" => RootMode::Learned,
                    "token" => RootMode::Token,
                    _ => return Err(Error::Config(format!("root_mode: {value:?}"))),
                }
            }
            "arc_mlp" => s.arc_mlp = num(key, value)?,
            "label_mlp" => s.label_mlp = num(key, value)?,
            "mlp_dropout" => s.mlp_dropout = num(key, value)?,
            "aux_hidden" => s.aux_hidden = num(key, value)?,
            "aux_dropout" => s.aux_dropout = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "beta1" => self.beta1 = num(key, value)?,
            "beta2" => self.beta2 = num(key, value)?,
            "adam_eps" => self.adam_eps = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "eval_every" => self.eval_every = num(key, value)?,
            "patience" => self.patience = num(key, value)?,
            "max_epochs" => self.max_epochs = num(key, value)?,
            "target_lf" => self.target_lf = if value == "none" { None } else { Some(num(key, value)?) },
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        if self.batch_size == 0 || self.eval_every == 0 {
            return Err(Error::Config("batch_size and eval_every must be positive".into()));
        }
        Ok(())
    }

    /// Serializes every key, suitable for [`TrainConfig::from_key_values`].
    pub fn to_key_values(&self) -> String {
        let m = &self.model;
        let e = &m.encoder;
        let s = &m.scorer;
        let mut stack = Vec::new();
        if m.stackprop.h {
            stack.push("H");
        }
        if m.stackprop.b {
            stack.push("B");
        }
        let lines = [
            format!("tasks={}", m.tasks),
            format!(
                "loss_mode={}",
                match m.loss_mode {
                    LossMode::Uncertainty => "uncertainty",
                    LossMode::PlainSum => "plain-sum",
                }
            ),
            format!(
                "stackprop={}",
                if stack.is_empty() {
                    "none".to_string()
                } else {
                    stack.join(",")
                }
            ),
            format!("c_h={}", m.stackprop.c_h),
            format!("c_b={}", m.stackprop.c_b),
            format!("sigma_floor={}", m.sigma_floor),
            format!("min_count={}", m.min_count),
            format!("multiset_includes_root={}", m.multiset_includes_root),
            format!(
                "embedding_mode={}",
                match e.mode {
                    EmbeddingMode::Word => "word",
                    EmbeddingMode::WordLemmaPos => "word+lemma+pos",
                }
            ),
            format!("word_dim={}", e.word_dim),
            format!("lemma_dim={}", e.lemma_dim),
            format!("pos_dim={}", e.pos_dim),
            format!("contextual_dim={}", e.contextual_dim),
            format!("lstm_layers={}", e.lstm_layers),
            format!("lstm_hidden={}", e.lstm_hidden),
            format!("lstm_dropout={}", e.lstm_dropout),
            format!("lexical_drop={}", e.lexical_drop),
            format!(
                "root_mode={}",
                match e.root_mode {
                    RootMode::Learned => "learned",
                    RootMode::Token => "token",
                }
            ),
            format!("arc_mlp={}", s.arc_mlp),
            format!("label_mlp={}", s.label_mlp),
            format!("mlp_dropout={}", s.mlp_dropout),
            format!("aux_hidden={}", s.aux_hidden),
            format!("aux_dropout={}", s.aux_dropout),
            format!("batch_size={}", self.batch_size),
            format!("learning_rate={}", self.learning_rate),
            format!("beta1={}", self.beta1),
            format!("beta2={}", self.beta2),
            format!("adam_eps={}", self.adam_eps),
            format!("seed={}", self.seed),
            format!("eval_every={}", self.eval_every),
            format!("patience={}", self.patience),
            format!("max_epochs={}", self.max_epochs),
            format!(
                "target_lf={}",
                self.target_lf.map_or("none".to_string(), |x| x.to_string())
            ),
        ];
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }
}
