//! Rule-based half of the pipeline on gold mentions: sentence splitting,
//! segment normalization and bucket assembly.
//!
//!     cargo run --release --example parse_report

use segalign::pipeline::{assemble_segments, normalize_segment_mention, split_sentences};

const REPORT: &str = "EXAM: MRI lumbar spine without contrast.
FINDINGS: Vertebral body heights are maintained.
L3-4: Mild disc bulge. No canal stenosis.
At L45 there is a broad-based protrusion. Moderate narrowing of the canal.
The exiting nerve root is contacted.
L5/S1: Unremarkable.
IMPRESSION: Moderate stenosis at L4-5.";

fn main() {
    for w in ["L23", "L@L3", "L2_L3", "C7T1", "L24", "T1-T2"] {
        println!("{w:>6} -> {:?}", normalize_segment_mention(w).map(|s| s.name()));
    }
    println!();
    let sentences = split_sentences(REPORT);
    let texts: Vec<&str> = sentences.iter().map(|s| s.text(REPORT)).collect();
    // stand-in for the tagger: every whitespace-delimited word is a candidate window
    let mentions: Vec<Vec<_>> = texts
        .iter()
        .map(|t| {
            t.split(|c: char| c.is_whitespace() || c == ':' || c == ',')
                .filter_map(normalize_segment_mention)
                .collect()
        })
        .collect();
    let segmented = assemble_segments(&texts, &mentions);
    for b in &segmented.buckets {
        println!("{:<6} {}", b.segment.name(), b.text);
    }
    println!("{:<6} {}", "-", segmented.unassigned_text);
}
