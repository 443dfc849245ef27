//! Synthetic spine MRI reports with gold segment labels and location spans,
//! plus the tokenizer and vocabulary shared by every model.

mod datasets;
mod generator;
mod templates;
mod vocab;

pub use datasets::{
    classifier_examples, gold_segmented, gold_sentence_mentions, split_reports, tag_tokens, tagger_examples,
    ExampleOrigin,
};
pub use generator::{
    default_priors, generate_corpus, read_corpus, write_corpus, AnnotatedReport, GeneratorConfig, LocationSpan,
    TemplateUse,
};
pub use templates::{Template, TemplateId, TemplateTable};
pub use vocab::{build_vocab, encode_segment_text, encode_tokens, tokenize, Encoded, Token, Vocab, SPECIALS};
