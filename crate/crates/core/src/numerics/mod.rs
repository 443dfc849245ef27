//! Dense real-matrix kernel and seeded randomness shared by every other module.

pub mod dump;
mod matrix;
mod rng;

pub use matrix::{frobenius_norm, layer_norm_rows, matmul, row_softmax, Matrix};
pub(crate) use matrix::{dot, gemm, gemm_nt_acc, gemm_tn_acc, softmax_in_place};
pub use rng::{name_hash, Rng, Stream};
