//! Trains one single-task classifier per task on a small corpus and prints
//! the per-epoch history and test macro-F1.
//!
//!     cargo run --release --example train_single_task

use segalign::cli::workflow::{run_trial, Prepared, TrainMode};
use segalign::cli::RunConfig;
use segalign::corpus::generate_corpus;

fn main() -> segalign::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.generator.n_reports = 600;
    let prep = Prepared::split(&generate_corpus(&cfg.generator)?, &cfg)?;
    println!("{} training / {} test segments, vocab {}", prep.train.len(), prep.test.len(), prep.vocab.len());
    for task in prep.schema().names() {
        let run = run_trial(&prep, &cfg, &TrainMode::Single(task.to_string()), 0)?;
        for h in &run.outcome.history {
            println!("  {task:<9} epoch {} loss {:.4} validation F1 {:.4} lr {:.2e}", h.epoch, h.train_loss, h.mean_val_macro_f1(), h.lr);
        }
        println!("{task:<9} test macro-F1 {:.4} (best epoch {})", run.test_scores[task], run.outcome.best_epoch);
    }
    Ok(())
}
