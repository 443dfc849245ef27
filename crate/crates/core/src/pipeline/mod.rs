//! Report text to per-segment severity predictions: sentence splitting,
//! location tagging, mention normalization, segment assembly and
//! classification.

mod assemble;
mod run;
mod segment;
mod text;

pub use assemble::{assemble_segments, SegmentBucket, SegmentedReport};
pub use run::{
    location_windows, run_batch, run_pipeline, summarize, tag_sentence_locations, PipelineModels, PipelineOutput,
    PipelineRecord, PipelineSummary, SegmentPrediction, TaggedToken,
};
pub use segment::{normalize_segment_mention, BodyPart, MotionSegment};
pub use text::{split_sentences, Sentence};
