use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::assemble::{assemble_segments, SegmentedReport};
use super::segment::{normalize_segment_mention, MotionSegment};
use super::text::split_sentences;
use crate::analysis::quantile;
use crate::corpus::{encode_tokens, tokenize, Token, Vocab};
use crate::error::{Error, Result};
use crate::model::{HeadMode, Logits, Mode, ParameterStore, TokenBatch, CLS_ID};
use crate::numerics::row_softmax;

/// A trained segmenter and classifier sharing one vocabulary.
#[derive(Clone, Copy)]
pub struct PipelineModels<'a> {
    pub tagger: &'a ParameterStore,
    pub classifier: &'a ParameterStore,
    pub vocab: &'a Vocab,
}

impl<'a> PipelineModels<'a> {
    pub fn new(tagger: &'a ParameterStore, classifier: &'a ParameterStore, vocab: &'a Vocab) -> Result<Self> {
        if tagger.config().head_mode != HeadMode::TokenClassifier {
            return Err(Error::Config("segmenter must be a token classifier".into()));
        }
        if classifier.config().head_mode != HeadMode::SequenceClassifier {
            return Err(Error::Config("severity model must be a sequence classifier".into()));
        }
        for (what, cfg) in [("segmenter", tagger.config()), ("classifier", classifier.config())] {
            if cfg.vocab_size != vocab.len() {
                return Err(Error::Config(format!(
                    "{what} expects {} token ids but the vocabulary has {}",
                    cfg.vocab_size,
                    vocab.len()
                )));
            }
        }
        Ok(PipelineModels { tagger, classifier, vocab })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedToken {
    pub token: Token,
    pub location: bool,
}

/// Argmax Location/Other tag for every token of one sentence. Tokens past
/// the segmenter's length limit are tagged Other.
pub fn tag_sentence_locations(tagger: &ParameterStore, vocab: &Vocab, sentence: &str) -> Result<Vec<TaggedToken>> {
    let tokens = tokenize(sentence);
    if tokens.is_empty() {
        return Ok(Vec::new());
    }
    let keep = tokens.len().min(tagger.config().max_seq_len - 1);
    let ids: Vec<u32> = std::iter::once(CLS_ID).chain(tokens[..keep].iter().map(|t| vocab.id(&t.text))).collect();
    let fwd = tagger.forward(&TokenBatch::from_sequences(&[ids]), Mode::Eval, false)?;
    let Logits::Token(blocks) = fwd.logits else {
        return Err(Error::Input("tagging needs a token classifier".into()));
    };
    let scores = &blocks[0];
    Ok(tokens
        .into_iter()
        .enumerate()
        .map(|(i, token)| {
            let location = i < keep && {
                let row = scores.row(i + 1);
                row[1] > row[0]
            };
            TaggedToken { token, location }
        })
        .collect())
}

/// Byte ranges of maximal runs of Location tokens.
pub fn location_windows(tags: &[TaggedToken]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    for t in tags {
        match (t.location, run.as_mut()) {
            (true, Some(r)) => r.1 = t.token.end,
            (true, None) => run = Some((t.token.start, t.token.end)),
            (false, _) => out.extend(run.take()),
        }
    }
    out.extend(run);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPrediction {
    pub segment: MotionSegment,
    /// Predicted class per task, schema order.
    pub classes: Vec<usize>,
    /// Softmax probabilities per task, schema order.
    pub probabilities: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub segmented: SegmentedReport,
    pub predictions: Vec<SegmentPrediction>,
}

impl PipelineOutput {
    pub fn no_segments_found(&self) -> bool {
        self.segmented.no_segments_found()
    }

    pub fn records(&self, task_names: &[&str]) -> Vec<PipelineRecord> {
        self.predictions
            .iter()
            .map(|p| PipelineRecord {
                report_id: self.segmented.id.clone(),
                segment: p.segment,
                classes: task_names.iter().zip(&p.classes).map(|(t, &c)| (t.to_string(), c)).collect(),
                probabilities: task_names.iter().zip(&p.probabilities).map(|(t, p)| (t.to_string(), p.clone())).collect(),
            })
            .collect()
    }
}

/// One JSON Lines record per predicted (report, segment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub report_id: String,
    pub segment: MotionSegment,
    pub classes: BTreeMap<String, usize>,
    pub probabilities: BTreeMap<String, Vec<f64>>,
}

/// Splits, tags, assembles and classifies one report. Sentences that fall
/// into the unassigned bucket are never classified.
pub fn run_pipeline(id: &str, text: &str, models: PipelineModels<'_>) -> Result<PipelineOutput> {
    let sentences = split_sentences(text);
    let mut texts = Vec::with_capacity(sentences.len());
    let mut mentions = Vec::with_capacity(sentences.len());
    for s in &sentences {
        let sentence = s.text(text);
        let tags = tag_sentence_locations(models.tagger, models.vocab, sentence)?;
        mentions.push(
            location_windows(&tags)
                .into_iter()
                .filter_map(|(a, b)| normalize_segment_mention(&sentence[a..b]))
                .collect::<Vec<_>>(),
        );
        texts.push(sentence);
    }
    let mut segmented = assemble_segments(&texts, &mentions);
    segmented.id = id.to_string();
    if segmented.buckets.is_empty() {
        return Ok(PipelineOutput { segmented, predictions: Vec::new() });
    }

    let max_len = models.classifier.config().max_seq_len;
    let seqs: Vec<Vec<u32>> = segmented.buckets.iter().map(|b| encode_tokens(&b.text, models.vocab, max_len)).collect();
    let fwd = models.classifier.forward(&TokenBatch::from_sequences(&seqs), Mode::Eval, false)?;
    let Logits::Sequence(blocks) = fwd.logits else {
        return Err(Error::Input("classification needs a sequence classifier".into()));
    };
    let probs: Vec<_> = blocks.iter().map(row_softmax).collect();
    let predictions = segmented
        .buckets
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let probabilities: Vec<Vec<f64>> = probs.iter().map(|p| p.row(i).to_vec()).collect();
            let classes = probabilities
                .iter()
                .map(|p| p.iter().enumerate().fold(0, |best, (k, &v)| if v > p[best] { k } else { best }))
                .collect();
            SegmentPrediction { segment: b.segment, classes, probabilities }
        })
        .collect();
    Ok(PipelineOutput { segmented, predictions })
}

/// Runs many reports, split across `jobs` threads; output order follows
/// input order and each report carries its wall-clock latency.
pub fn run_batch<S: AsRef<str> + Sync>(
    reports: &[(S, S)],
    models: PipelineModels<'_>,
    jobs: usize,
) -> Result<Vec<(PipelineOutput, Duration)>> {
    let run_one = |(id, text): &(S, S)| {
        let t0 = Instant::now();
        run_pipeline(id.as_ref(), text.as_ref(), models).map(|o| (o, t0.elapsed()))
    };
    let jobs = jobs.max(1);
    if jobs == 1 || reports.len() < 2 {
        return reports.iter().map(run_one).collect();
    }
    let chunk = reports.len().div_ceil(jobs);
    let parts: Vec<Result<Vec<_>>> = std::thread::scope(|s| {
        let handles: Vec<_> = reports
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(run_one).collect::<Result<Vec<_>>>()))
            .collect();
        handles.into_iter().map(|h| h.join().expect("pipeline worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(reports.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub reports: usize,
    pub segments_predicted: usize,
    /// Reports for which no motion segment could be found.
    pub no_segments_found: usize,
    pub latency_ms_mean: f64,
    pub latency_ms_p50: f64,
    pub latency_ms_p95: f64,
}

pub fn summarize(results: &[(PipelineOutput, Duration)]) -> PipelineSummary {
    let mut ms: Vec<f64> = results.iter().map(|(_, d)| d.as_secs_f64() * 1e3).collect();
    ms.sort_by(f64::total_cmp);
    let q = |p: f64| if ms.is_empty() { 0.0 } else { quantile(&ms, p) };
    PipelineSummary {
        reports: results.len(),
        segments_predicted: results.iter().map(|(o, _)| o.predictions.len()).sum(),
        no_segments_found: results.iter().filter(|(o, _)| o.no_segments_found()).count(),
        latency_ms_mean: if ms.is_empty() { 0.0 } else { ms.iter().sum::<f64>() / ms.len() as f64 },
        latency_ms_p50: q(0.5),
        latency_ms_p95: q(0.95),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tok(text: &str, start: usize, location: bool) -> TaggedToken {
        TaggedToken { token: Token { text: text.to_lowercase(), start, end: start + text.len() }, location }
    }

    #[test]
    fn windows_from_runs() {
        // "L4 - L5: bulge at L5S1"
        let tags = vec![
            tok("L4", 0, true),
            tok("-", 3, true),
            tok("L5", 5, true),
            tok(":", 7, false),
            tok("bulge", 9, false),
            tok("at", 15, false),
            tok("L5S1", 18, true),
        ];
        assert_eq!(location_windows(&tags), vec![(0, 7), (18, 22)]);
        assert!(location_windows(&[tok("no", 0, false)]).is_empty());
    }
}
