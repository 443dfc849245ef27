use crate::error::{Error, Result};
use crate::model::{Logits, MultiTaskSchema};
use crate::numerics::{softmax_in_place, Matrix};

/// `-log softmax(logits)[target]` and its gradient `softmax - onehot`.
pub fn cross_entropy(logits: &[f64], target: usize) -> (f64, Vec<f64>) {
    assert!(target < logits.len(), "target {target} out of range");
    let mut probs = logits.to_vec();
    softmax_in_place(&mut probs);
    // log-sum-exp form stays finite for confident predictions
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let loss = lse - logits[target];
    probs[target] -= 1.0;
    (loss, probs)
}

/// Mean cross-entropy of one task over a batch, with the gradient of that
/// mean at the logits.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskLoss {
    pub task_name: String,
    pub loss: f64,
    /// `batch x n_classes`.
    pub grad: Matrix,
}

impl TaskLoss {
    pub fn from_block(task_name: &str, logits: &Matrix, targets: &[usize]) -> Result<TaskLoss> {
        if logits.rows() != targets.len() {
            return Err(Error::Shape(format!(
                "{} logit rows for {} targets",
                logits.rows(),
                targets.len()
            )));
        }
        let n = logits.rows().max(1) as f64;
        let mut loss = 0.0;
        let mut grad = Vec::with_capacity(logits.data().len());
        for (r, &t) in targets.iter().enumerate() {
            if t >= logits.cols() {
                return Err(Error::Input(format!("target {t} for a {}-class task", logits.cols())));
            }
            let (l, g) = cross_entropy(logits.row(r), t);
            loss += l / n;
            grad.extend(g.into_iter().map(|v| v / n));
        }
        Ok(TaskLoss {
            task_name: task_name.to_string(),
            loss,
            grad: Matrix::from_vec(logits.rows(), logits.cols(), grad)?,
        })
    }
}

/// Unweighted sum of per-task losses; gradient blocks in schema order.
pub fn multi_task_loss(schema: &MultiTaskSchema, losses: Vec<TaskLoss>) -> Result<(f64, Logits)> {
    let mut blocks = Vec::with_capacity(schema.len());
    let mut total = 0.0;
    let mut losses: Vec<Option<TaskLoss>> = losses.into_iter().map(Some).collect();
    for task in &schema.tasks {
        let slot = losses
            .iter_mut()
            .find(|l| l.as_ref().is_some_and(|l| l.task_name == task.name))
            .and_then(Option::take)
            .ok_or_else(|| Error::Input(format!("no loss for task {}", task.name)))?;
        if slot.grad.cols() != task.n_classes {
            return Err(Error::Shape(format!("task {} gradient width", task.name)));
        }
        total += slot.loss;
        blocks.push(slot.grad);
    }
    if let Some(extra) = losses.into_iter().flatten().next() {
        return Err(Error::Input(format!("task {} is not in the schema", extra.task_name)));
    }
    Ok((total, Logits::Sequence(blocks)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_examples() {
        let (l, g) = cross_entropy(&[0.0, 0.0], 0);
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert_eq!(g, vec![-0.5, 0.5]);
        let (l, _) = cross_entropy(&[10.0, -10.0], 0);
        assert!(l < 1e-8);
        let (l, _) = cross_entropy(&[1.0, 2.0, 3.0], 2);
        let expect = (1.0 + (-1f64).exp() + (-2f64).exp()).ln();
        assert!((l - expect).abs() < 1e-14);
        assert!((l - 0.4076).abs() < 1e-4);
        let (l, g) = cross_entropy(&[1000.0, -1000.0], 1);
        assert!((l - 2000.0).abs() < 1e-9 && g.iter().all(|v| v.is_finite()));
    }

    fn tl(name: &str, loss: f64, width: usize) -> TaskLoss {
        TaskLoss { task_name: name.into(), loss, grad: Matrix::zeros(1, width) }
    }

    #[test]
    fn sums_and_orders() {
        let schema = MultiTaskSchema::lumbar();
        let (total, grad) =
            multi_task_loss(&schema, vec![tl("nerve", 0.25, 2), tl("stenosis", 0.5, 3), tl("disc", 0.25, 3)])
                .unwrap();
        assert_eq!(total, 1.0);
        let widths: Vec<usize> = grad.blocks().iter().map(Matrix::cols).collect();
        assert_eq!(widths, vec![3, 3, 2]);
    }

    #[test]
    fn missing_or_extra_task_rejected() {
        let schema = MultiTaskSchema::lumbar();
        assert!(multi_task_loss(&schema, vec![tl("stenosis", 0.5, 3), tl("disc", 0.2, 3)]).is_err());
        let extra = vec![tl("stenosis", 0.5, 3), tl("disc", 0.2, 3), tl("nerve", 0.1, 2), tl("cord", 0.1, 2)];
        assert!(multi_task_loss(&schema, extra).is_err());
    }
}
