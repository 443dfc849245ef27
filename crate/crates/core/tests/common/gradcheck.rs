//! Analytic gradients against central finite differences.

use segalign::model::{
    init_model, logit_objective, param_groups, HeadMode, Logits, ModelConfig, Mode,
    MultiTaskSchema, ParameterStore, TokenBatch,
};
use segalign::numerics::{Matrix, Rng};

const H: f64 = 1e-5;

pub fn reference(mode: HeadMode) -> ModelConfig {
    let schema = match mode {
        HeadMode::SequenceClassifier => MultiTaskSchema::lumbar(),
        HeadMode::TokenClassifier => MultiTaskSchema::location_tagger(),
    };
    ModelConfig {
        vocab_size: 24,
        max_seq_len: 8,
        d_model: 16,
        n_layers: 2,
        n_heads: 2,
        d_ff: 24,
        dropout_p: 0.0,
        head_mode: mode,
        schema,
        ..Default::default()
    }
}

pub fn batch() -> TokenBatch {
    TokenBatch::from_sequences(&[vec![0, 4, 7, 9, 5], vec![0, 11, 3, 2], vec![0, 20, 21, 22, 23, 6, 8]])
}

fn random_weights(logits: &Logits, rng: &mut Rng) -> Logits {
    let draw = |m: &Matrix, rng: &mut Rng| {
        Matrix::from_vec(m.rows(), m.cols(), (0..m.data().len()).map(|_| rng.normal()).collect()).unwrap()
    };
    match logits {
        Logits::Sequence(b) => Logits::Sequence(b.iter().map(|m| draw(m, rng)).collect()),
        Logits::Token(b) => Logits::Token(b.iter().map(|m| draw(m, rng)).collect()),
    }
}

fn objective(p: &ParameterStore, w: &Logits) -> f64 {
    logit_objective(&p.forward(&batch(), Mode::Eval, false).unwrap().logits, w)
}

/// Max over groups of `max_i |analytic - numeric| / max(max_i |numeric|, 1e-12)`,
/// plus the worst per-parameter error with a 1e-4 denominator floor (below
/// that, central differences are dominated by roundoff).
pub fn check(mode: HeadMode, seed: u64) -> (f64, f64) {
    let cfg = reference(mode);
    let mut params = init_model(&cfg, &Rng::new(seed)).unwrap();
    // perturb away from zero biases and unit gains so every path is exercised
    let mut rng = Rng::new(seed + 100);
    for v in params.values_mut() {
        *v += 0.05 * rng.normal();
    }
    let out = params.forward(&batch(), Mode::Eval, false).unwrap();
    let w = random_weights(&out.logits, &mut rng);
    let analytic = params.backward_flat(&out.cache, &w).unwrap();

    let mut numeric = vec![0.0; analytic.len()];
    for i in 0..analytic.len() {
        let orig = params.values()[i];
        params.values_mut()[i] = orig + H;
        let up = objective(&params, &w);
        params.values_mut()[i] = orig - H;
        let down = objective(&params, &w);
        params.values_mut()[i] = orig;
        numeric[i] = (up - down) / (2.0 * H);
    }

    let mut worst_group = 0.0_f64;
    for g in param_groups(&cfg) {
        let a = g.gather(&analytic);
        let n = g.gather(&numeric);
        let scale = n.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-12);
        let err = a.iter().zip(&n).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        worst_group = worst_group.max(err / scale);
    }
    let worst_param = analytic
        .iter()
        .zip(&numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-4))
        .fold(0.0_f64, f64::max);
    (worst_group, worst_param)
}

