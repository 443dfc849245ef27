//! Post-LN transformer encoder with manual reverse-mode differentiation.
//!
//! Each row of a [`TokenBatch`] is processed on its non-PAD positions only,
//! which is the same computation as masking PAD keys in a padded batch: no
//! valid position ever attends to a PAD position, and PAD query rows feed
//! nothing downstream.

use serde::{Deserialize, Serialize};

use super::config::HeadMode;
use super::groups::{param_groups, GradientSet};
use super::params::{LayerOffsets, ParameterStore};
use crate::error::{Error, Result};
use crate::numerics::{gemm, gemm_nt_acc, gemm_tn_acc, softmax_in_place, Matrix, Rng};

pub const CLS_ID: u32 = 0;
pub const PAD_ID: u32 = 1;
pub const UNK_ID: u32 = 2;
pub const SEP_ID: u32 = 3;

/// Token ids, `rows x cols`, right-padded with [`PAD_ID`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenBatch {
    rows: usize,
    cols: usize,
    ids: Vec<u32>,
}

impl TokenBatch {
    pub fn new(rows: usize, cols: usize, ids: Vec<u32>) -> Result<Self> {
        if ids.len() != rows * cols {
            return Err(Error::Shape(format!("token batch {rows}x{cols} with {} ids", ids.len())));
        }
        Ok(TokenBatch { rows, cols, ids })
    }

    pub fn from_sequences<S: AsRef<[u32]>>(seqs: &[S]) -> Self {
        let cols = seqs.iter().map(|s| s.as_ref().len()).max().unwrap_or(0);
        let mut ids = vec![PAD_ID; seqs.len() * cols];
        for (r, s) in seqs.iter().enumerate() {
            ids[r * cols..r * cols + s.as_ref().len()].copy_from_slice(s.as_ref());
        }
        TokenBatch { rows: seqs.len(), cols, ids }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.ids[r * self.cols..(r + 1) * self.cols]
    }

    /// Attention mask: 1 where the id is not PAD.
    pub fn mask(&self) -> Vec<u8> {
        self.ids.iter().map(|&i| u8::from(i != PAD_ID)).collect()
    }
}

pub enum Mode<'a> {
    Eval,
    Train(&'a mut Rng),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbePoint {
    PostAttention,
    PostFfn,
    LayerOutput,
}

impl ProbePoint {
    pub const ALL: [ProbePoint; 3] =
        [ProbePoint::PostAttention, ProbePoint::PostFfn, ProbePoint::LayerOutput];

    pub fn label(self) -> &'static str {
        match self {
            ProbePoint::PostAttention => "post_attention",
            ProbePoint::PostFfn => "post_ffn",
            ProbePoint::LayerOutput => "layer_output",
        }
    }
}

/// Classification-token activations at every probe point; each matrix has
/// one row per batch row and `d_model` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationStack {
    pub layers: Vec<Vec<(ProbePoint, Matrix)>>,
    pub pooled: Matrix,
}

impl ActivationStack {
    pub fn probe_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum::<usize>() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Logits {
    /// One `batch x n_classes` block per task, in schema order.
    Sequence(Vec<Matrix>),
    /// One `valid_len x n_classes` matrix per batch row.
    Token(Vec<Matrix>),
}

impl Logits {
    pub fn blocks(&self) -> &[Matrix] {
        match self {
            Logits::Sequence(b) | Logits::Token(b) => b,
        }
    }

    pub fn zeros_like(&self) -> Logits {
        let z = |b: &Vec<Matrix>| b.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
        match self {
            Logits::Sequence(b) => Logits::Sequence(z(b)),
            Logits::Token(b) => Logits::Token(z(b)),
        }
    }
}

struct LayerCache {
    x_in: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// Attention probabilities, `n_heads` blocks of `len x len`.
    probs: Vec<f64>,
    ctx: Vec<f64>,
    xhat1: Vec<f64>,
    inv1: Vec<f64>,
    h1: Vec<f64>,
    pre_act: Vec<f64>,
    act: Vec<f64>,
    ffn_out: Vec<f64>,
    xhat2: Vec<f64>,
    inv2: Vec<f64>,
    out: Vec<f64>,
}

struct ExampleCache {
    ids: Vec<u32>,
    positions: Vec<usize>,
    layers: Vec<LayerCache>,
    /// Classifier input after dropout (`1 x d` or `len x d`).
    classifier_in: Vec<f64>,
    /// Dropout multipliers for `classifier_in` (empty when dropout is off).
    dropout: Vec<f64>,
}

pub struct ForwardCache {
    examples: Vec<ExampleCache>,
}

pub struct ForwardOutput {
    pub logits: Logits,
    pub activations: Option<ActivationStack>,
    pub cache: ForwardCache,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

fn gelu(u: f64) -> f64 {
    0.5 * u * (1.0 + (GELU_C * (u + GELU_A * u * u * u)).tanh())
}

fn gelu_grad(u: f64) -> f64 {
    let t = (GELU_C * (u + GELU_A * u * u * u)).tanh();
    0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * u * u)
}

fn add_bias(x: &mut [f64], bias: &[f64]) {
    for row in x.chunks_mut(bias.len()) {
        row.iter_mut().zip(bias).for_each(|(v, b)| *v += b);
    }
}

fn sum_rows_into(dy: &[f64], acc: &mut [f64]) {
    for row in dy.chunks(acc.len()) {
        acc.iter_mut().zip(row).for_each(|(a, v)| *a += v);
    }
}

/// Returns (normalized*gain+bias, xhat, 1/std) per row.
fn ln_forward(x: &[f64], gain: &[f64], bias: &[f64], eps: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let d = gain.len();
    let n = x.len() / d;
    let mut out = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    let mut inv = vec![0.0; n];
    for r in 0..n {
        let row = &x[r * d..(r + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let s = 1.0 / (var + eps).sqrt();
        inv[r] = s;
        for c in 0..d {
            let h = (row[c] - mean) * s;
            xhat[r * d + c] = h;
            out[r * d + c] = h * gain[c] + bias[c];
        }
    }
    (out, xhat, inv)
}

fn ln_backward(
    dy: &[f64],
    xhat: &[f64],
    inv: &[f64],
    gain: &[f64],
    dgain: &mut [f64],
    dbias: &mut [f64],
) -> Vec<f64> {
    let d = gain.len();
    let mut dx = vec![0.0; dy.len()];
    for r in 0..inv.len() {
        let dyr = &dy[r * d..(r + 1) * d];
        let xh = &xhat[r * d..(r + 1) * d];
        let mut sum_dxh = 0.0;
        let mut sum_dxh_xh = 0.0;
        for c in 0..d {
            dgain[c] += dyr[c] * xh[c];
            dbias[c] += dyr[c];
            let dxh = dyr[c] * gain[c];
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xh[c];
        }
        let n = d as f64;
        for c in 0..d {
            let dxh = dyr[c] * gain[c];
            dx[r * d + c] = inv[r] / n * (n * dxh - sum_dxh - xh[c] * sum_dxh_xh);
        }
    }
    dx
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Per-row argmax with ties resolved toward the lowest class index.
pub fn argmax_rows(block: &Matrix) -> Vec<usize> {
    (0..block.rows()).map(|r| argmax(block.row(r))).collect()
}

impl ParameterStore {
    fn valid_positions(&self, batch: &TokenBatch, r: usize) -> Result<(Vec<u32>, Vec<usize>)> {
        let cfg = self.config();
        let mut ids = Vec::new();
        let mut positions = Vec::new();
        // over-length rows are truncated to max_seq_len
        for (pos, &id) in batch.row(r).iter().enumerate().take(cfg.max_seq_len) {
            if id == PAD_ID {
                continue;
            }
            if id as usize >= cfg.vocab_size {
                return Err(Error::Input(format!(
                    "token id {id} out of range for vocab of {}",
                    cfg.vocab_size
                )));
            }
            ids.push(id);
            positions.push(pos);
        }
        if ids.is_empty() {
            return Err(Error::Input(format!("batch row {r} has no tokens")));
        }
        Ok((ids, positions))
    }

    fn layer_forward(&self, lo: &LayerOffsets, x: Vec<f64>, len: usize) -> LayerCache {
        let cfg = self.config();
        let d = cfg.d_model;
        let (nh, dk) = (cfg.n_heads, cfg.head_dim());
        let p = |off: usize, n: usize| self.slice(off, n);
        let proj = |w: usize, b: usize| {
            let mut y = vec![0.0; len * d];
            gemm(&x, p(w, d * d), &mut y, len, d, d);
            add_bias(&mut y, p(b, d));
            y
        };
        let q = proj(lo.wq, lo.bq);
        let k = proj(lo.wk, lo.bk);
        let v = proj(lo.wv, lo.bv);
        let scale = 1.0 / (dk as f64).sqrt();
        let mut probs = vec![0.0; nh * len * len];
        let mut ctx = vec![0.0; len * d];
        for h in 0..nh {
            let hc = h * dk;
            let block = &mut probs[h * len * len..(h + 1) * len * len];
            for i in 0..len {
                let qi = &q[i * d + hc..i * d + hc + dk];
                let row = &mut block[i * len..(i + 1) * len];
                for (j, s) in row.iter_mut().enumerate() {
                    let kj = &k[j * d + hc..j * d + hc + dk];
                    *s = qi.iter().zip(kj).map(|(a, b)| a * b).sum::<f64>() * scale;
                }
                softmax_in_place(row);
                let ci = &mut ctx[i * d + hc..i * d + hc + dk];
                for (j, &a) in row.iter().enumerate() {
                    let vj = &v[j * d + hc..j * d + hc + dk];
                    ci.iter_mut().zip(vj).for_each(|(c, vv)| *c += a * vv);
                }
            }
        }
        let mut r1 = vec![0.0; len * d];
        gemm(&ctx, p(lo.wo, d * d), &mut r1, len, d, d);
        add_bias(&mut r1, p(lo.bo, d));
        r1.iter_mut().zip(&x).for_each(|(a, b)| *a += b);
        let (h1, xhat1, inv1) = ln_forward(&r1, p(lo.ln1_g, d), p(lo.ln1_b, d), cfg.layer_norm_eps);

        let f = cfg.d_ff;
        let mut pre_act = vec![0.0; len * f];
        gemm(&h1, p(lo.w1, d * f), &mut pre_act, len, d, f);
        add_bias(&mut pre_act, p(lo.b1, f));
        let act: Vec<f64> = pre_act.iter().map(|&u| gelu(u)).collect();
        let mut ffn_out = vec![0.0; len * d];
        gemm(&act, p(lo.w2, f * d), &mut ffn_out, len, f, d);
        add_bias(&mut ffn_out, p(lo.b2, d));
        let r2: Vec<f64> = ffn_out.iter().zip(&h1).map(|(a, b)| a + b).collect();
        let (out, xhat2, inv2) = ln_forward(&r2, p(lo.ln2_g, d), p(lo.ln2_b, d), cfg.layer_norm_eps);
        LayerCache {
            x_in: x,
            q,
            k,
            v,
            probs,
            ctx,
            xhat1,
            inv1,
            h1,
            pre_act,
            act,
            ffn_out,
            xhat2,
            inv2,
            out,
        }
    }

    /// Runs the encoder and classifier heads.
    ///
    /// In train mode, dropout with rate `dropout_p` is applied to the vectors
    /// entering the classifier heads; eval mode is deterministic. With
    /// `capture`, classification-token activations at every probe point are
    /// returned as well.
    pub fn forward(&self, batch: &TokenBatch, mut mode: Mode<'_>, capture: bool) -> Result<ForwardOutput> {
        let cfg = self.config();
        let layout = self.layout();
        let d = cfg.d_model;
        let mut examples = Vec::with_capacity(batch.rows());
        for r in 0..batch.rows() {
            let (ids, positions) = self.valid_positions(batch, r)?;
            let len = ids.len();
            let mut x = vec![0.0; len * d];
            for (t, (&id, &pos)) in ids.iter().zip(&positions).enumerate() {
                let tok = self.slice(layout.tok_emb + id as usize * d, d);
                let pe = self.slice(layout.pos_emb + pos * d, d);
                for c in 0..d {
                    x[t * d + c] = tok[c] + pe[c];
                }
            }
            let mut layers = Vec::with_capacity(cfg.n_layers);
            for lo in &layout.layers {
                let cache = self.layer_forward(lo, x, len);
                x = cache.out.clone();
                layers.push(cache);
            }
            let mut classifier_in = match cfg.head_mode {
                HeadMode::SequenceClassifier => x[..d].to_vec(),
                HeadMode::TokenClassifier => x,
            };
            let mut dropout = Vec::new();
            if let Mode::Train(rng) = &mut mode {
                if cfg.dropout_p > 0.0 {
                    let keep = 1.0 - cfg.dropout_p;
                    dropout = (0..classifier_in.len())
                        .map(|_| if rng.uniform() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    classifier_in.iter_mut().zip(&dropout).for_each(|(v, m)| *v *= m);
                }
            }
            examples.push(ExampleCache { ids, positions, layers, classifier_in, dropout });
        }

        let logits = match cfg.head_mode {
            HeadMode::SequenceClassifier => Logits::Sequence(
                layout
                    .heads
                    .iter()
                    .map(|h| {
                        let n = h.n_classes;
                        let mut block = vec![0.0; examples.len() * n];
                        for (r, ex) in examples.iter().enumerate() {
                            let out = &mut block[r * n..(r + 1) * n];
                            gemm(&ex.classifier_in, self.slice(h.w, d * n), out, 1, d, n);
                            add_bias(out, self.slice(h.b, n));
                        }
                        Matrix::from_raw(examples.len(), n, block)
                    })
                    .collect(),
            ),
            HeadMode::TokenClassifier => {
                let h = &layout.heads[0];
                let n = h.n_classes;
                Logits::Token(
                    examples
                        .iter()
                        .map(|ex| {
                            let len = ex.ids.len();
                            let mut out = vec![0.0; len * n];
                            gemm(&ex.classifier_in, self.slice(h.w, d * n), &mut out, len, d, n);
                            add_bias(&mut out, self.slice(h.b, n));
                            Matrix::from_raw(len, n, out)
                        })
                        .collect(),
                )
            }
        };
        if logits.blocks().iter().any(|m| m.data().iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("logits".into()));
        }

        let activations = capture.then(|| {
            let n = examples.len();
            let gather = |f: &dyn Fn(&ExampleCache) -> &[f64]| {
                let mut data = Vec::with_capacity(n * d);
                for ex in &examples {
                    data.extend_from_slice(&f(ex)[..d]);
                }
                Matrix::from_raw(n, d, data)
            };
            let layers = (0..cfg.n_layers)
                .map(|l| {
                    vec![
                        (ProbePoint::PostAttention, gather(&|ex| &ex.layers[l].h1)),
                        (ProbePoint::PostFfn, gather(&|ex| &ex.layers[l].ffn_out)),
                        (ProbePoint::LayerOutput, gather(&|ex| &ex.layers[l].out)),
                    ]
                })
                .collect();
            let pooled = gather(&|ex| &ex.layers[cfg.n_layers - 1].out);
            ActivationStack { layers, pooled }
        });

        Ok(ForwardOutput { logits, activations, cache: ForwardCache { examples } })
    }

    /// Gradient of `sum(dlogits * logits)` with respect to every parameter,
    /// as a flat vector in layout order.
    pub fn backward_flat(&self, cache: &ForwardCache, dlogits: &Logits) -> Result<Vec<f64>> {
        let cfg = self.config();
        let layout = self.layout();
        let d = cfg.d_model;
        let mut grad = vec![0.0; layout.total];
        let n_rows = cache.examples.len();

        for (r, ex) in cache.examples.iter().enumerate() {
            let len = ex.ids.len();
            // d(classifier input)
            let mut dcls = vec![0.0; ex.classifier_in.len()];
            match (cfg.head_mode, dlogits) {
                (HeadMode::SequenceClassifier, Logits::Sequence(blocks)) => {
                    if blocks.len() != layout.heads.len() {
                        return Err(Error::Shape("one gradient block per task expected".into()));
                    }
                    for (h, block) in layout.heads.iter().zip(blocks) {
                        if block.shape() != (n_rows, h.n_classes) {
                            return Err(Error::Shape(format!(
                                "logit gradient block {:?}, expected {:?}",
                                block.shape(),
                                (n_rows, h.n_classes)
                            )));
                        }
                        let g = block.row(r);
                        gemm_tn_acc(&ex.classifier_in, g, &mut grad[h.w..h.w + d * h.n_classes], 1, d, h.n_classes);
                        grad[h.b..h.b + h.n_classes].iter_mut().zip(g).for_each(|(a, v)| *a += v);
                        gemm_nt_acc(g, self.slice(h.w, d * h.n_classes), &mut dcls, 1, h.n_classes, d);
                    }
                }
                (HeadMode::TokenClassifier, Logits::Token(rows)) => {
                    let h = &layout.heads[0];
                    let n = h.n_classes;
                    let g = rows.get(r).ok_or_else(|| Error::Shape("missing token gradient row".into()))?;
                    if g.shape() != (len, n) {
                        return Err(Error::Shape("token gradient shape".into()));
                    }
                    gemm_tn_acc(&ex.classifier_in, g.data(), &mut grad[h.w..h.w + d * n], len, d, n);
                    sum_rows_into(g.data(), &mut grad[h.b..h.b + n]);
                    gemm_nt_acc(g.data(), self.slice(h.w, d * n), &mut dcls, len, n, d);
                }
                _ => return Err(Error::Input("logit gradient kind does not match head mode".into())),
            }
            if !ex.dropout.is_empty() {
                dcls.iter_mut().zip(&ex.dropout).for_each(|(g, m)| *g *= m);
            }
            let mut dx = vec![0.0; len * d];
            dx[..dcls.len()].copy_from_slice(&dcls);

            for (lo, lc) in layout.layers.iter().zip(&ex.layers).rev() {
                dx = self.layer_backward(lo, lc, &dx, len, &mut grad);
            }
            for (t, (&id, &pos)) in ex.ids.iter().zip(&ex.positions).enumerate() {
                let g = &dx[t * d..(t + 1) * d];
                let te = layout.tok_emb + id as usize * d;
                grad[te..te + d].iter_mut().zip(g).for_each(|(a, v)| *a += v);
                let pe = layout.pos_emb + pos * d;
                grad[pe..pe + d].iter_mut().zip(g).for_each(|(a, v)| *a += v);
            }
        }
        Ok(grad)
    }

    fn layer_backward(
        &self,
        lo: &LayerOffsets,
        lc: &LayerCache,
        dout: &[f64],
        len: usize,
        grad: &mut [f64],
    ) -> Vec<f64> {
        let cfg = self.config();
        let d = cfg.d_model;
        let f = cfg.d_ff;
        let (nh, dk) = (cfg.n_heads, cfg.head_dim());
        let p = |off: usize, n: usize| self.slice(off, n);

        // second layer norm
        let (dg, db) = split2(grad, lo.ln2_g, lo.ln2_b, d);
        let dr2 = ln_backward(dout, &lc.xhat2, &lc.inv2, p(lo.ln2_g, d), dg, db);
        // feed-forward
        let mut dh1 = dr2.clone();
        gemm_tn_acc(&lc.act, &dr2, &mut grad[lo.w2..lo.w2 + f * d], len, f, d);
        sum_rows_into(&dr2, &mut grad[lo.b2..lo.b2 + d]);
        let mut dact = vec![0.0; len * f];
        gemm_nt_acc(&dr2, p(lo.w2, f * d), &mut dact, len, d, f);
        let dpre: Vec<f64> = dact.iter().zip(&lc.pre_act).map(|(g, &u)| g * gelu_grad(u)).collect();
        gemm_tn_acc(&lc.h1, &dpre, &mut grad[lo.w1..lo.w1 + d * f], len, d, f);
        sum_rows_into(&dpre, &mut grad[lo.b1..lo.b1 + f]);
        gemm_nt_acc(&dpre, p(lo.w1, d * f), &mut dh1, len, f, d);
        // first layer norm
        let (dg, db) = split2(grad, lo.ln1_g, lo.ln1_b, d);
        let dr1 = ln_backward(&dh1, &lc.xhat1, &lc.inv1, p(lo.ln1_g, d), dg, db);
        // attention output projection
        let mut dx = dr1.clone();
        gemm_tn_acc(&lc.ctx, &dr1, &mut grad[lo.wo..lo.wo + d * d], len, d, d);
        sum_rows_into(&dr1, &mut grad[lo.bo..lo.bo + d]);
        let mut dctx = vec![0.0; len * d];
        gemm_nt_acc(&dr1, p(lo.wo, d * d), &mut dctx, len, d, d);
        // per-head attention
        let scale = 1.0 / (dk as f64).sqrt();
        let mut dq = vec![0.0; len * d];
        let mut dk_ = vec![0.0; len * d];
        let mut dv = vec![0.0; len * d];
        let mut dprob = vec![0.0; len];
        for h in 0..nh {
            let hc = h * dk;
            let block = &lc.probs[h * len * len..(h + 1) * len * len];
            for i in 0..len {
                let a = &block[i * len..(i + 1) * len];
                let dci = &dctx[i * d + hc..i * d + hc + dk];
                for j in 0..len {
                    let vj = &lc.v[j * d + hc..j * d + hc + dk];
                    dprob[j] = dci.iter().zip(vj).map(|(x, y)| x * y).sum();
                    let dvj = &mut dv[j * d + hc..j * d + hc + dk];
                    dvj.iter_mut().zip(dci).for_each(|(g, c)| *g += a[j] * c);
                }
                let inner: f64 = a.iter().zip(&dprob).map(|(x, y)| x * y).sum();
                for j in 0..len {
                    let ds = a[j] * (dprob[j] - inner) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    for c in 0..dk {
                        dq[i * d + hc + c] += ds * lc.k[j * d + hc + c];
                        dk_[j * d + hc + c] += ds * lc.q[i * d + hc + c];
                    }
                }
            }
        }
        for (dy, w, b) in [(&dq, lo.wq, lo.bq), (&dk_, lo.wk, lo.bk), (&dv, lo.wv, lo.bv)] {
            gemm_tn_acc(&lc.x_in, dy, &mut grad[w..w + d * d], len, d, d);
            sum_rows_into(dy, &mut grad[b..b + d]);
            gemm_nt_acc(dy, p(w, d * d), &mut dx, len, d, d);
        }
        dx
    }

    /// Backward pass grouped per parameter group.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &Logits) -> Result<GradientSet> {
        let flat = self.backward_flat(cache, dlogits)?;
        Ok(GradientSet::from_flat(&param_groups(self.config()), &flat))
    }

    /// Per-task argmax class for every row (sequence mode).
    pub fn predict(&self, batch: &TokenBatch) -> Result<Vec<Vec<usize>>> {
        match self.forward(batch, Mode::Eval, false)?.logits {
            Logits::Sequence(blocks) => Ok(blocks.iter().map(argmax_rows).collect()),
            Logits::Token(_) => Err(Error::Input("predict requires a sequence classifier".into())),
        }
    }
}

fn split2(grad: &mut [f64], a: usize, b: usize, n: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(a + n <= b);
    let (lo, hi) = grad.split_at_mut(b);
    (&mut lo[a..a + n], &mut hi[..n])
}

/// Sum of `x*y` over matching entries; the scalar objective whose gradient
/// [`ParameterStore::backward_flat`] returns.
pub fn logit_objective(logits: &Logits, weights: &Logits) -> f64 {
    logits
        .blocks()
        .iter()
        .zip(weights.blocks())
        .map(|(a, b)| a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum::<f64>())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_model, ModelConfig, MultiTaskSchema};

    fn cfg() -> ModelConfig {
        ModelConfig {
            vocab_size: 20,
            max_seq_len: 10,
            d_model: 8,
            n_layers: 2,
            n_heads: 2,
            d_ff: 12,
            dropout_p: 0.0,
            ..Default::default()
        }
    }

    fn batch() -> TokenBatch {
        TokenBatch::from_sequences(&[vec![0, 5, 6, 7], vec![0, 9, 4], vec![0, 11, 12, 13, 14]])
    }

    #[test]
    fn cervical_logit_widths() {
        let c = ModelConfig { dropout_p: 0.5, ..cfg() }.with_schema(MultiTaskSchema::cervical());
        let p = init_model(&c, &Rng::new(0)).unwrap();
        let seqs: Vec<Vec<u32>> = (0..8).map(|i| vec![0, 4 + i, 5]).collect();
        let out = p.forward(&TokenBatch::from_sequences(&seqs), Mode::Eval, false).unwrap();
        let widths: Vec<_> = out.logits.blocks().iter().map(|b| b.shape()).collect();
        assert_eq!(widths, vec![(8, 3), (8, 3), (8, 2), (8, 2)]);
    }

    #[test]
    fn eval_is_deterministic_and_dropout_zero_matches_train() {
        let p = init_model(&cfg(), &Rng::new(1)).unwrap();
        let a = p.forward(&batch(), Mode::Eval, false).unwrap().logits;
        let b = p.forward(&batch(), Mode::Eval, false).unwrap().logits;
        assert_eq!(a, b);
        let mut rng = Rng::new(5);
        let c = p.forward(&batch(), Mode::Train(&mut rng), false).unwrap().logits;
        assert_eq!(a, c);
    }

    #[test]
    fn dropout_changes_train_logits() {
        let c = ModelConfig { dropout_p: 0.5, ..cfg() };
        let p = init_model(&c, &Rng::new(1)).unwrap();
        let a = p.forward(&batch(), Mode::Eval, false).unwrap().logits;
        let mut rng = Rng::new(5);
        let b = p.forward(&batch(), Mode::Train(&mut rng), false).unwrap().logits;
        assert_ne!(a, b);
    }

    #[test]
    fn capture_shapes() {
        let c = ModelConfig { n_layers: 4, ..cfg() };
        let p = init_model(&c, &Rng::new(2)).unwrap();
        let out = p.forward(&batch(), Mode::Eval, true).unwrap();
        let stack = out.activations.unwrap();
        assert_eq!(stack.probe_count(), 4 * 3 + 1);
        for layer in &stack.layers {
            for (_, m) in layer {
                assert_eq!(m.shape(), (3, 8));
            }
        }
    }

    #[test]
    fn padding_does_not_leak() {
        let p = init_model(&cfg(), &Rng::new(3)).unwrap();
        let alone = p.forward(&TokenBatch::from_sequences(&[vec![0, 9, 4]]), Mode::Eval, false).unwrap();
        let padded = p.forward(&batch(), Mode::Eval, false).unwrap();
        for (a, b) in alone.logits.blocks().iter().zip(padded.logits.blocks()) {
            assert_eq!(a.row(0), b.row(1));
        }
    }

    #[test]
    fn truncates_over_length_rows() {
        let p = init_model(&cfg(), &Rng::new(3)).unwrap();
        let long: Vec<u32> = (0..25).map(|i| 4 + i % 10).collect();
        let short = long[..10].to_vec();
        let a = p.forward(&TokenBatch::from_sequences(&[long]), Mode::Eval, false).unwrap();
        let b = p.forward(&TokenBatch::from_sequences(&[short]), Mode::Eval, false).unwrap();
        assert_eq!(a.logits, b.logits);
    }

    #[test]
    fn rejects_out_of_vocab_and_empty_rows() {
        let p = init_model(&cfg(), &Rng::new(3)).unwrap();
        assert!(p.forward(&TokenBatch::from_sequences(&[vec![0, 99]]), Mode::Eval, false).is_err());
        let empty = TokenBatch::new(1, 2, vec![PAD_ID, PAD_ID]).unwrap();
        assert!(p.forward(&empty, Mode::Eval, false).is_err());
    }

    #[test]
    fn zero_upstream_gradient_gives_zero() {
        let p = init_model(&cfg(), &Rng::new(4)).unwrap();
        let out = p.forward(&batch(), Mode::Eval, false).unwrap();
        let g = p.backward(&out.cache, &out.logits.zeros_like()).unwrap();
        assert!(g.entries.iter().all(|(_, v)| v.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn argmax_ties_go_low() {
        let m = Matrix::from_rows(&[vec![0.1, 0.9, 0.3], vec![0.5, 0.5, 0.1]]).unwrap();
        assert_eq!(argmax_rows(&m), vec![1, 0]);
    }
}
