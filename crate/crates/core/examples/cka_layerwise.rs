//! Layerwise linear CKA between two single-task models, and of a model with
//! itself, on a probe batch of test segments.
//!
//!     cargo run --release --example cka_layerwise

use segalign::analysis::CkaVariant;
use segalign::cli::workflow::{compare_representations, run_trial, Prepared, TrainMode};
use segalign::cli::RunConfig;
use segalign::corpus::generate_corpus;

fn main() -> segalign::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.generator.n_reports = 600;
    let prep = Prepared::split(&generate_corpus(&cfg.generator)?, &cfg)?;
    let a = run_trial(&prep, &cfg, &TrainMode::Single("stenosis".into()), 0)?;
    let b = run_trial(&prep, &cfg, &TrainMode::Single("nerve".into()), 0)?;
    let probe = prep.probe_batch(128)?;
    for (name, x, y) in [("stenosis~nerve", &a, &b), ("stenosis~self", &a, &a)] {
        for variant in [CkaVariant::Squared, CkaVariant::Unsquared] {
            let report = compare_representations(&x.outcome.params, &y.outcome.params, &probe, variant)?;
            println!("{name} {variant:?}");
            for layer in &report.layers {
                let values: Vec<String> = layer.values.iter().map(|(p, v)| format!("{p:?}={v:.3}")).collect();
                println!("  layer {} median {:.3}  {}", layer.layer, layer.summary.median, values.join(" "));
            }
        }
    }
    Ok(())
}
