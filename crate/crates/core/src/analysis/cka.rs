use serde::{Deserialize, Serialize};

use super::boxplot::BoxStats;
use crate::error::{Error, Result};
use crate::model::{ActivationStack, ProbePoint};
use crate::numerics::{frobenius_norm, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CkaVariant {
    /// `‖X1ᵀX2‖²_F / (‖X1ᵀX1‖_F ‖X2ᵀX2‖_F)`.
    #[default]
    Squared,
    /// Same with an unsquared numerator; kept for comparison only, since it
    /// does not give 1 for identical inputs.
    Unsquared,
}

fn cross(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = vec![0.0; a.cols() * b.cols()];
    crate::numerics::gemm_tn_acc(a.data(), b.data(), &mut out, a.rows(), a.cols(), b.cols());
    Matrix::from_raw(a.cols(), b.cols(), out)
}

/// Linear CKA between two activation matrices over the same `N` examples,
/// with column centering. Clamped to `[0, 1]`.
pub fn linear_cka(r1: &Matrix, r2: &Matrix) -> Result<f64> {
    linear_cka_with(r1, r2, CkaVariant::Squared)
}

pub fn linear_cka_with(r1: &Matrix, r2: &Matrix, variant: CkaVariant) -> Result<f64> {
    if r1.rows() != r2.rows() {
        return Err(Error::Shape(format!("{} rows against {}", r1.rows(), r2.rows())));
    }
    if r1.rows() < 2 {
        return Err(Error::Input("CKA needs at least two examples".into()));
    }
    let x1 = r1.center_columns();
    let x2 = r2.center_columns();
    for (name, x) in [("first", &x1), ("second", &x2)] {
        if frobenius_norm(x) == 0.0 {
            return Err(Error::UndefinedSimilarity(format!("{name} activation matrix is constant")));
        }
    }
    let value = match variant {
        CkaVariant::Squared => {
            // scale out magnitudes first; the squared form is invariant to it
            // and the products stay well inside f64 range
            let x1 = x1.scale(1.0 / frobenius_norm(&x1))?;
            let x2 = x2.scale(1.0 / frobenius_norm(&x2))?;
            let num = frobenius_norm(&cross(&x1, &x2));
            num * num / (frobenius_norm(&cross(&x1, &x1)) * frobenius_norm(&cross(&x2, &x2)))
        }
        CkaVariant::Unsquared => {
            frobenius_norm(&cross(&x1, &x2))
                / (frobenius_norm(&cross(&x1, &x1)) * frobenius_norm(&cross(&x2, &x2)))
        }
    };
    Ok(value.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCka {
    /// 1-based encoder layer.
    pub layer: usize,
    pub values: Vec<(ProbePoint, f64)>,
    pub summary: BoxStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CkaReport {
    pub layers: Vec<LayerCka>,
}

impl CkaReport {
    pub fn medians(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.summary.median).collect()
    }
}

/// CKA per probe point at every depth of two models fed the same probe
/// batch.
pub fn layerwise_cka(a: &ActivationStack, b: &ActivationStack) -> Result<CkaReport> {
    layerwise_cka_with(a, b, CkaVariant::Squared)
}

pub fn layerwise_cka_with(a: &ActivationStack, b: &ActivationStack, variant: CkaVariant) -> Result<CkaReport> {
    if a.layers.len() != b.layers.len() {
        return Err(Error::Input(format!("{} layers against {}", a.layers.len(), b.layers.len())));
    }
    if a.pooled.rows() != b.pooled.rows() {
        return Err(Error::Input(format!(
            "probe batches differ: {} examples against {}",
            a.pooled.rows(),
            b.pooled.rows()
        )));
    }
    let mut layers = Vec::with_capacity(a.layers.len());
    for (l, (la, lb)) in a.layers.iter().zip(&b.layers).enumerate() {
        let mut values = Vec::with_capacity(la.len());
        for (pa, ma) in la {
            let mb = lb
                .iter()
                .find(|(pb, _)| pb == pa)
                .map(|(_, m)| m)
                .ok_or_else(|| Error::Input(format!("probe {} missing at layer {}", pa.label(), l + 1)))?;
            values.push((*pa, linear_cka_with(ma, mb, variant)?));
        }
        let v: Vec<f64> = values.iter().map(|(_, v)| *v).collect();
        layers.push(LayerCka { layer: l + 1, summary: BoxStats::of(&v)?, values });
    }
    Ok(CkaReport { layers })
}
