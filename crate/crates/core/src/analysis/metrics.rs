use crate::error::{Error, Result};

/// Per-class counts for a single-label classification task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: Vec<usize>,
    pub false_pos: Vec<usize>,
    pub false_neg: Vec<usize>,
}

impl ConfusionCounts {
    pub fn tally(predictions: &[usize], golds: &[usize], n_classes: usize) -> Result<Self> {
        if predictions.len() != golds.len() {
            return Err(Error::Input(format!(
                "{} predictions for {} gold labels",
                predictions.len(),
                golds.len()
            )));
        }
        if predictions.is_empty() {
            return Err(Error::Input("macro F1 of an empty set".into()));
        }
        let mut c = ConfusionCounts {
            true_pos: vec![0; n_classes],
            false_pos: vec![0; n_classes],
            false_neg: vec![0; n_classes],
        };
        for (&p, &g) in predictions.iter().zip(golds) {
            if p >= n_classes || g >= n_classes {
                return Err(Error::Input(format!("label {} out of range", p.max(g))));
            }
            if p == g {
                c.true_pos[p] += 1;
            } else {
                c.false_pos[p] += 1;
                c.false_neg[g] += 1;
            }
        }
        Ok(c)
    }

    pub fn f1(&self, class: usize) -> f64 {
        let tp = self.true_pos[class] as f64;
        let denom = 2.0 * tp + self.false_pos[class] as f64 + self.false_neg[class] as f64;
        if denom == 0.0 {
            0.0
        } else {
            2.0 * tp / denom
        }
    }
}

/// Unweighted mean of per-class F1 scores over `0..n_classes`.
///
/// A class that appears in neither golds nor predictions scores 0 and is
/// logged, since it still counts in the denominator.
pub fn macro_f1(predictions: &[usize], golds: &[usize], n_classes: usize) -> Result<f64> {
    let c = ConfusionCounts::tally(predictions, golds, n_classes)?;
    let mut sum = 0.0;
    for k in 0..n_classes {
        if c.true_pos[k] + c.false_pos[k] + c.false_neg[k] == 0 {
            log::warn!("class {k} absent from both golds and predictions; counted as F1 = 0");
        }
        sum += c.f1(k);
    }
    Ok(sum / n_classes as f64)
}

/// F1 of one designated positive class (e.g. the Location tag).
pub fn positive_class_f1(predictions: &[usize], golds: &[usize], positive: usize) -> Result<f64> {
    let n = predictions.iter().chain(golds).copied().max().unwrap_or(0).max(positive) + 1;
    Ok(ConfusionCounts::tally(predictions, golds, n)?.f1(positive))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(macro_f1(&[0, 1, 2], &[0, 1, 2], 3).unwrap(), 1.0);
        let v = macro_f1(&[0, 1, 1, 1], &[0, 0, 1, 1], 2).unwrap();
        assert!((v - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-15);
        let v = macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn absent_class_counts_as_zero() {
        assert_eq!(macro_f1(&[0, 1], &[0, 1], 3).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn errors() {
        assert!(macro_f1(&[], &[], 2).is_err());
        assert!(macro_f1(&[0], &[0, 1], 2).is_err());
        assert!(macro_f1(&[2], &[0], 2).is_err());
    }

    #[test]
    fn positive_class() {
        assert_eq!(positive_class_f1(&[1, 1, 0, 0], &[1, 0, 1, 0], 1).unwrap(), 0.5);
    }
}
