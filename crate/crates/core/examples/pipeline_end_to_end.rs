//! Trains a segmenter and a multi-task classifier, then runs the full
//! extraction pipeline on held-out reports and checks it against gold.
//!
//!     cargo run --release --example pipeline_end_to_end

use segalign::cli::workflow::{run_trial, Prepared, TrainMode};
use segalign::cli::RunConfig;
use segalign::corpus::generate_corpus;
use segalign::pipeline::{run_batch, summarize, PipelineModels};

fn main() -> segalign::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.generator.n_reports = 600;
    let prep = Prepared::split(&generate_corpus(&cfg.generator)?, &cfg)?;
    let tagger = run_trial(&prep, &cfg, &TrainMode::Tagger, 0)?;
    println!("segmenter location F1 {:.4}", tagger.test_scores["location"]);
    let classifier = run_trial(&prep, &cfg, &TrainMode::Multi, 0)?;
    let models = PipelineModels::new(&tagger.outcome.params, &classifier.outcome.params, &prep.vocab)?;

    let inputs: Vec<(&str, &str)> = prep.test_reports.iter().map(|r| (r.id.as_str(), r.text.as_str())).collect();
    let results = run_batch(&inputs, models, 4)?;
    let schema = prep.schema();
    let names = schema.names();
    let (mut found, mut gold_total, mut correct, mut scored) = (0, 0, 0, 0);
    for ((out, _), report) in results.iter().zip(&prep.test_reports) {
        gold_total += report.segments.len();
        for p in &out.predictions {
            let Some(gold) = report.labels(p.segment, &schema) else { continue };
            found += 1;
            scored += gold.len();
            correct += gold.iter().zip(&p.classes).filter(|(g, c)| g == c).count();
        }
    }
    println!("{found}/{gold_total} gold segments recovered, {correct}/{scored} labels correct");
    if let Some((out, _)) = results.iter().find(|(o, _)| !o.predictions.is_empty()) {
        for rec in out.records(&names) {
            println!("{} {:<6} {:?}", rec.report_id, rec.segment.name(), rec.classes);
        }
    }
    println!("{:#?}", summarize(&results));
    Ok(())
}
