//! Trains the shared-encoder multi-task model and compares its per-task
//! macro-F1 and size with one single-task model per task.
//!
//!     cargo run --release --example train_multi_task

use segalign::cli::workflow::{run_trial, Prepared, TrainMode};
use segalign::cli::RunConfig;
use segalign::corpus::generate_corpus;
use segalign::model::parameter_count;

fn main() -> segalign::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.generator.n_reports = 600;
    let prep = Prepared::split(&generate_corpus(&cfg.generator)?, &cfg)?;
    let multi = run_trial(&prep, &cfg, &TrainMode::Multi, 0)?;
    let mut stl_params = 0;
    println!("{:<9} {:>8} {:>8}", "task", "single", "multi");
    for task in prep.schema().names() {
        let single = run_trial(&prep, &cfg, &TrainMode::Single(task.to_string()), 0)?;
        stl_params += parameter_count(single.outcome.params.config());
        println!("{task:<9} {:>8.4} {:>8.4}", single.test_scores[task], multi.test_scores[task]);
    }
    println!("parameters: multi-task {} vs single-task total {stl_params}", parameter_count(multi.outcome.params.config()));
    Ok(())
}
