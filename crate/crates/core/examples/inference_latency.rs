//! Times one multi-task forward pass against one pass per single-task model
//! over the same 64-segment batch. Untrained weights time the same as
//! trained ones, so no training is needed.
//!
//!     cargo run --release --example inference_latency

use segalign::cli::workflow::compare_latency;
use segalign::cli::ModelSection;
use segalign::model::{init_model, HeadMode, MultiTaskSchema, TokenBatch};
use segalign::numerics::Rng;

fn main() -> segalign::Result<()> {
    let shape = ModelSection::default();
    let schema = MultiTaskSchema::lumbar();
    let vocab = 600;
    let multi = init_model(&shape.model_config(vocab, schema.clone(), HeadMode::SequenceClassifier), &Rng::new(0))?;
    let singles = schema
        .names()
        .into_iter()
        .map(|t| init_model(&shape.model_config(vocab, schema.only(t)?, HeadMode::SequenceClassifier), &Rng::new(1)))
        .collect::<segalign::Result<Vec<_>>>()?;
    let mut rng = Rng::new(2);
    let seqs: Vec<Vec<u32>> = (0..64)
        .map(|_| {
            let len = 8 + rng.below(shape.max_seq_len - 8);
            std::iter::once(segalign::model::CLS_ID).chain((1..len).map(|_| 4 + rng.below(vocab - 4) as u32)).collect()
        })
        .collect();
    let batch = TokenBatch::from_sequences(&seqs);
    let refs: Vec<_> = singles.iter().collect();
    let c = compare_latency(&multi, &refs, &batch, 50)?;
    println!("batch of {} segments, median of {} rounds", c.batch, c.repeats);
    println!("multi-task  {:>8.3} ms  {:>7} parameters", c.multi_task_ms, c.multi_task_params);
    println!("single-task {:>8.3} ms  {:>7} parameters (x{})", c.single_task_ms, c.single_task_params, singles.len());
    println!("speedup {:.2}x", c.speedup);
    Ok(())
}
