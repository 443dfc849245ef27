mod common;

use segalign::corpus::{generate_corpus, GeneratorConfig};
use segalign::pipeline::{normalize_segment_mention, split_sentences, BodyPart};

#[test]
fn normalization_table() {
    assert!(common::NORMALIZATION_CASES.len() >= 40);
    let wrong: Vec<_> = common::NORMALIZATION_CASES
        .iter()
        .filter(|(w, want)| normalize_segment_mention(w) != *want)
        .map(|(w, want)| format!("{w:?}: got {:?}, want {want:?}", normalize_segment_mention(w)))
        .collect();
    assert!(wrong.is_empty(), "{wrong:#?}");
}

#[test]
fn sentence_offsets_rebuild_every_report() {
    for body in [BodyPart::Lumbar, BodyPart::Cervical] {
        for r in generate_corpus(&GeneratorConfig { n_reports: 500, seed: 6, ..GeneratorConfig::new(body) }).unwrap() {
            let rebuilt: String =
                split_sentences(&r.text).iter().map(|s| &r.text[s.extent_start..s.extent_end]).collect();
            assert_eq!(rebuilt, r.text, "{}", r.id);
        }
    }
}
