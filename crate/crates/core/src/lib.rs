//! Workbench for comparing multi-task and single-task transformer encoders.

pub mod analysis;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod train;

pub use error::{Error, Result};
