use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sdp_parser::config::TrainConfig;
use sdp_parser::decode::DecodeMode;
use sdp_parser::encoder::Table;
use sdp_parser::error::Result;
use sdp_parser::eval::labeled_f;
use sdp_parser::formats::vectors::{attach_contextual, read_contextual, read_embeddings};
use sdp_parser::formats::{read_file, write_file, Format};
use sdp_parser::graph::{validate, DepGraph, ValidateConfig, ViolationCounts};
use sdp_parser::model::ParserModel;
use sdp_parser::significance::{fisher_pitman, read_sample};
use sdp_parser::stats::corpus_stats;
use sdp_parser::train::{prepare_model, train_model};

#[derive(Parser)]
#[command(
    name = "sdp-parser",
    version,
    about = "Multi-task biaffine semantic dependency graph parser"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write a checkpoint directory.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        train_contextual: Option<PathBuf>,
        #[arg(long)]
        dev_contextual: Option<PathBuf>,
        /// Pretrained word embeddings: one token and its reals per line.
        #[arg(long)]
        word_embeddings: Option<PathBuf>,
        #[arg(long)]
        lemma_embeddings: Option<PathBuf>,
    },
    /// Parse sentences with a trained model.
    Parse {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Input and output format; defaults to the input file extension.
        #[arg(long)]
        format: Option<Format>,
        #[arg(long, default_value = "greedy")]
        decode: DecodeMode,
        #[arg(long)]
        contextual: Option<PathBuf>,
    },
    /// Score predicted graphs against gold graphs.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Corpus statistics.
    Stats {
        #[arg(long)]
        input: PathBuf,
        /// Print an aligned table instead of key=value lines.
        #[arg(long)]
        table: bool,
    },
    /// Report graphs violating label constraints.
    Audit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "exclusive")]
        exclusive: Vec<String>,
        #[arg(long = "unique")]
        unique: Vec<String>,
    },
    /// Exact one-sided permutation test that sample B beats sample A.
    Significance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

fn read_corpus(path: &Path, format: Option<Format>) -> Result<Vec<DepGraph>> {
    read_file(path, format.unwrap_or_else(|| Format::from_path(path)))
}

fn with_contextual(graphs: &mut [DepGraph], path: Option<&Path>) -> Result<()> {
    if let Some(p) = path {
        attach_contextual(graphs, read_contextual(BufReader::new(File::open(p)?))?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match cli.command {
        Command::Train {
            config,
            train,
            dev,
            out: dir,
            seed,
            train_contextual,
            dev_contextual,
            word_embeddings,
            lemma_embeddings,
        } => {
            let mut cfg = match config {
                Some(p) => TrainConfig::from_key_values(&fs::read_to_string(p)?)?,
                None => TrainConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let mut train_set = read_corpus(&train, None)?;
            with_contextual(&mut train_set, train_contextual.as_deref())?;
            let mut dev_set = match &dev {
                Some(p) => read_corpus(p, None)?,
                None => Vec::new(),
            };
            with_contextual(&mut dev_set, dev_contextual.as_deref())?;
            let mut model = prepare_model(&cfg, &train_set)?;
            for (path, table) in [(word_embeddings, Table::Word), (lemma_embeddings, Table::Lemma)] {
                if let Some(p) = path {
                    let vectors = read_embeddings(BufReader::new(File::open(&p)?))?;
                    let set = model
                        .encoder
                        .load_pretrained(&mut model.store, &model.vocab, table, &vectors)?;
                    writeln!(out, "pretrained_rows={set} table={table:?}")?;
                }
            }
            fs::create_dir_all(&dir)?;
            let mut log = File::create(dir.join("train.log"))?;
            let outcome = train_model(&cfg, model, &train_set, &dev_set, &mut log)?;
            outcome.model.save(&dir, &cfg)?;
            write!(out, "epochs={} best_epoch={}", outcome.epochs, outcome.best_epoch)?;
            if let Some(best) = &outcome.best {
                write!(out, " dev_lf={:.2}", best.main)?;
            }
            writeln!(out)?;
        }
        Command::Parse {
            model,
            input,
            output,
            format,
            decode,
            contextual,
        } => {
            let (parser, _) = ParserModel::load(&model)?;
            let fmt = format.unwrap_or_else(|| Format::from_path(&input));
            let mut graphs = read_file(&input, fmt)?;
            with_contextual(&mut graphs, contextual.as_deref())?;
            let mut parsed = Vec::with_capacity(graphs.len());
            let mut truncated = 0;
            for g in &graphs {
                let (p, t) = parser.predict(g, &[decode])?.remove(0);
                truncated += t.len();
                parsed.push(p);
            }
            write_file(&output, fmt, &parsed)?;
            writeln!(
                out,
                "sentences={} decode={decode} truncated_budgets={truncated} aux_forward_passes={}",
                parsed.len(),
                parser.aux_forward_count()
            )?;
        }
        Command::Eval { gold, pred, json } => {
            let gold = read_corpus(&gold, None)?;
            let pred = read_corpus(&pred, None)?;
            let report = labeled_f(&gold, &pred, &ValidateConfig::default())?;
            write!(out, "{}", report.key_values())?;
            if let Some(p) = json {
                fs::write(p, report.to_json()?)?;
            }
        }
        Command::Stats { input, table } => {
            let stats = corpus_stats(&read_corpus(&input, None)?);
            let text = if table { stats.table() } else { stats.key_values() };
            writeln!(out, "{text}")?;
        }
        Command::Audit {
            input,
            exclusive,
            unique,
        } => {
            let mut config = ValidateConfig::default();
            if !exclusive.is_empty() {
                config.exclusive = exclusive;
            }
            if !unique.is_empty() {
                config.unique = unique;
            }
            let graphs = read_corpus(&input, None)?;
            let mut counts = ViolationCounts::default();
            let mut bad = 0;
            for (k, g) in graphs.iter().enumerate() {
                let v = validate(g, &config);
                bad += !v.is_empty() as usize;
                for x in &v {
                    writeln!(out, "sentence={} {x}", k + 1)?;
                    counts.add(x);
                }
            }
            writeln!(
                out,
                "sentences={} sentences_with_violations={bad} violations_exclusive={} violations_unique={} violations_duplicate={}",
                graphs.len(),
                counts.exclusive,
                counts.unique,
                counts.duplicate
            )?;
        }
        Command::Significance { a, b } => {
            let a = read_sample(&fs::read_to_string(a)?)?;
            let b = read_sample(&fs::read_to_string(b)?)?;
            let r = fisher_pitman(&a, &b)?;
            writeln!(
                out,
                "observed={:.6} p={:.6} splits={} at_least_as_large={}",
                r.observed, r.p_value, r.splits, r.at_least_as_large
            )?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error kind={} msg={msg:?}", e.kind());
            ExitCode::FAILURE
        }
    }
}
