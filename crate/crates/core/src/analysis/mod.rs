//! Representation similarity (linear CKA), gradient alignment, macro-F1 and
//! box-plot exports.

mod alignment;
mod boxplot;
mod cka;
mod metrics;

pub use alignment::{
    alignment_flag, apag, compare_gradients, grad_cosine, grad_dot, layer_alignment_proportions,
    AlignmentReport, GroupComparison,
};
pub use boxplot::{quantile, to_csv, to_json, BoxSeries, BoxStats};
pub use cka::{layerwise_cka, layerwise_cka_with, linear_cka, linear_cka_with, CkaReport, CkaVariant, LayerCka};
pub use metrics::{macro_f1, positive_class_f1, ConfusionCounts};
