//! Desk-scale transformer encoder: configuration, parameters, forward and
//! backward passes, parameter grouping and checkpoint formats.

mod checkpoint;
mod config;
mod encoder;
mod groups;
mod params;

pub use checkpoint::{read_gradient_set, vocab_hash, write_gradient_set, Checkpoint};
pub use config::{HeadMode, ModelConfig, MultiTaskSchema, TaskSpec};
pub use encoder::{
    argmax_rows, logit_objective, ActivationStack, ForwardCache, ForwardOutput, Logits, Mode,
    ProbePoint, TokenBatch, CLS_ID, PAD_ID, SEP_ID, UNK_ID,
};
pub use groups::{param_groups, GradientSet, GroupKind, ParamGroup, ParamGroupKey};
pub use params::{init_model, parameter_count, Layout, ParameterStore, TensorRole, TensorSpec};
