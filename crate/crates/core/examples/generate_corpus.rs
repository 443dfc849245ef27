//! Generates a small lumbar corpus and prints one report with its gold
//! segment labels and location spans.
//!
//!     cargo run --release --example generate_corpus

use segalign::corpus::{generate_corpus, GeneratorConfig};
use segalign::pipeline::BodyPart;

fn main() -> segalign::Result<()> {
    let cfg = GeneratorConfig { n_reports: 50, seed: 3, ..GeneratorConfig::new(BodyPart::Lumbar) };
    let reports = generate_corpus(&cfg)?;
    let r = reports.iter().find(|r| r.segments.len() >= 3).unwrap_or(&reports[0]);
    println!("{} (practice {}, ocr {})\n", r.id, r.practice, r.ocr);
    println!("{}\n", r.text);
    for (segment, labels) in &r.segments {
        println!("{:<8} {labels:?}", segment.name());
    }
    println!();
    for span in &r.spans {
        println!("{:>5}..{:<5} {:<8} {:?}", span.start, span.end, span.segment.name(), &r.text[span.start..span.end]);
    }
    let ocr = reports.iter().filter(|r| r.ocr).count();
    let without = reports.iter().filter(|r| r.segments.is_empty()).count();
    println!("\n{} reports, {ocr} with OCR noise, {without} without any level", reports.len());
    Ok(())
}
