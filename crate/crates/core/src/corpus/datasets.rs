//! Turns annotated reports into classifier and tagger training data.

use super::generator::AnnotatedReport;
use super::vocab::{encode_tokens, tokenize, Vocab};
use crate::error::{Error, Result};
use crate::model::{MultiTaskSchema, CLS_ID};
use crate::pipeline::{assemble_segments, split_sentences, MotionSegment, SegmentedReport, Sentence};
use crate::train::{stratified_split, SequenceDataset, SequenceExample, TokenExample};

/// Gold segment mentions per sentence, from the annotated spans.
pub fn gold_sentence_mentions(report: &AnnotatedReport, sentences: &[Sentence]) -> Vec<Vec<MotionSegment>> {
    sentences
        .iter()
        .map(|s| report.spans.iter().filter(|sp| s.contains(sp.start)).map(|sp| sp.segment).collect())
        .collect()
}

/// Segment buckets built from gold locations rather than tagger output.
pub fn gold_segmented(report: &AnnotatedReport) -> SegmentedReport {
    let sentences = split_sentences(&report.text);
    let texts: Vec<&str> = sentences.iter().map(|s| s.text(&report.text)).collect();
    let mut out = assemble_segments(&texts, &gold_sentence_mentions(report, &sentences));
    out.id = report.id.clone();
    out
}

/// Where a classifier example came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleOrigin {
    pub report_id: String,
    pub segment: MotionSegment,
}

/// One example per gold-labelled segment bucket, encoded to at most
/// `max_len` ids.
pub fn classifier_examples(
    reports: &[AnnotatedReport],
    vocab: &Vocab,
    max_len: usize,
    schema: &MultiTaskSchema,
) -> Result<(SequenceDataset, Vec<ExampleOrigin>)> {
    let mut examples = Vec::new();
    let mut origins = Vec::new();
    for r in reports {
        for bucket in gold_segmented(r).buckets {
            let labels = r.labels(bucket.segment, schema).ok_or_else(|| {
                Error::Format(format!("report {}: no gold labels for {}", r.id, bucket.segment))
            })?;
            examples.push(SequenceExample { tokens: encode_tokens(&bucket.text, vocab, max_len), labels });
            origins.push(ExampleOrigin { report_id: r.id.clone(), segment: bucket.segment });
        }
    }
    Ok((SequenceDataset::new(schema.clone(), examples)?, origins))
}

/// Token tags for one piece of text: 1 where a token overlaps a location
/// span (offsets relative to `text`), 0 elsewhere, with `[CLS]` in front.
pub fn tag_tokens(text: &str, spans: &[(usize, usize)], vocab: &Vocab, max_len: usize) -> TokenExample {
    let mut tokens = vec![CLS_ID];
    let mut tags = vec![0];
    for tok in tokenize(text).into_iter().take(max_len.saturating_sub(1)) {
        tokens.push(vocab.id(&tok.text));
        tags.push(usize::from(spans.iter().any(|&(s, e)| tok.start < e && s < tok.end)));
    }
    TokenExample { tokens, tags }
}

/// One tagging example per sentence.
pub fn tagger_examples(reports: &[AnnotatedReport], vocab: &Vocab, max_len: usize) -> Vec<TokenExample> {
    let mut out = Vec::new();
    for r in reports {
        for s in split_sentences(&r.text) {
            let spans: Vec<(usize, usize)> = r
                .spans
                .iter()
                .filter(|sp| s.contains(sp.start))
                .map(|sp| (sp.start - s.start, sp.end.min(s.end) - s.start))
                .collect();
            out.push(tag_tokens(s.text(&r.text), &spans, vocab, max_len));
        }
    }
    out
}

/// Report-level train/test split stratified on the worst class of the
/// first task (reports without segments count as class 0).
pub fn split_reports(
    reports: &[AnnotatedReport],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<AnnotatedReport>, Vec<AnnotatedReport>)> {
    let first = match reports.first() {
        Some(r) => r.body_part.schema().tasks[0].name.clone(),
        None => return Err(Error::Input("cannot split an empty corpus".into())),
    };
    let keys: Vec<usize> = reports
        .iter()
        .map(|r| r.segments.values().filter_map(|g| g.get(&first).copied()).max().unwrap_or(0))
        .collect();
    let split = stratified_split(&keys, test_fraction, seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| reports[i].clone()).collect();
    Ok((pick(&split.train), pick(&split.val)))
}
