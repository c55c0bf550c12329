//! Trains a small model on the synthetic corpus and reports dev scores.
//!
//! `cargo run --release --example synthetic`

use sdp_parser::decode::DecodeMode;
use sdp_parser::eval::labeled_f;
use sdp_parser::graph::ValidateConfig;
use sdp_parser::train::train;
use sdp_parser::{synthetic, TrainConfig};

fn main() -> sdp_parser::Result<()> {
    let corpus = synthetic::generate(200, 1);
    let (train_set, dev) = corpus.split_at(160);
    let config = TrainConfig::from_key_values("tasks=A,L,H\nword_dim=32\nlstm_hidden=32\nlstm_layers=1\narc_mlp=32\nlabel_mlp=32\naux_hidden=32\nlearning_rate=0.005\nmax_epochs=30\npatience=3")?;
    let outcome = train(&config, train_set, dev, &mut std::io::stderr())?;
    let mut pred = Vec::new();
    for g in dev {
        pred.push(outcome.model.predict(g, &[DecodeMode::BudgetH])?.remove(0).0);
    }
    print!("{}", labeled_f(dev, &pred, &ValidateConfig::default())?.key_values());
    Ok(())
}
