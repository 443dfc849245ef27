//! Gradient alignment between single-task runs, epoch by epoch, on a
//! correlated corpus and on one where the tasks are independent.
//!
//!     cargo run --release --example gradient_alignment

use segalign::cli::workflow::{compare_snapshots, run_trial, Prepared, TrainMode};
use segalign::cli::RunConfig;
use segalign::corpus::generate_corpus;

fn main() -> segalign::Result<()> {
    for correlation in [0.8, 0.0] {
        let mut cfg = RunConfig::default();
        cfg.generator.n_reports = 600;
        cfg.generator.task_correlation = correlation;
        let prep = Prepared::split(&generate_corpus(&cfg.generator)?, &cfg)?;
        let runs: Vec<_> = ["stenosis", "disc", "nerve"]
            .iter()
            .map(|t| run_trial(&prep, &cfg, &TrainMode::Single(t.to_string()), 0))
            .collect::<segalign::Result<_>>()?;
        println!("task correlation {correlation}");
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let series = compare_snapshots(&runs[i].outcome.snapshots, &runs[j].outcome.snapshots)?;
            for (epoch, r) in &series {
                let layers: Vec<String> =
                    r.layer_proportions.iter().map(|p| p.map_or("-".into(), |v| format!("{v:.2}"))).collect();
                println!(
                    "  {}~{} epoch {epoch}: APAG {:.3} cosine {:+.4} layers [{}]",
                    runs[i].mode, runs[j].mode, r.apag, r.cosine, layers.join(" ")
                );
            }
        }
    }
    Ok(())
}
