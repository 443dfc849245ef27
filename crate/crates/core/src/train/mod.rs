//! Single-task, multi-task and tagger training loops, plus masked-token
//! pretraining of a shared backbone.

mod data;
mod loss;
mod optim;
mod pretrain;
mod split;
mod trainer;

pub use data::{SequenceDataset, SequenceExample, TokenExample};
pub use loss::{cross_entropy, multi_task_loss, TaskLoss};
pub use optim::{clip_flat, clip_gradients, lr_at, AdamW, Scheduler};
pub use pretrain::pretrain_masked_lm;
pub use split::{stratified_split, Split};
pub use trainer::{
    evaluate_sequence, evaluate_tokens, fine_tune_multi_task, fine_tune_single_task, predict_sequences,
    predict_tags, train_multi_task,
    train_single_task, train_token_classifier, write_history_jsonl, EarlyStopping,
    EpochGradientSnapshot, EpochRecord, TokenScores, TrainConfig, TrainOutcome,
};
