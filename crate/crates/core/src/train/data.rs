use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{MultiTaskSchema, CLS_ID};

/// One classification input: token ids starting with `[CLS]`, one label per
/// schema task (schema order).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceExample {
    pub tokens: Vec<u32>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDataset {
    pub schema: MultiTaskSchema,
    pub examples: Vec<SequenceExample>,
}

impl SequenceDataset {
    /// Checks that every example carries an in-range label for every task.
    pub fn new(schema: MultiTaskSchema, examples: Vec<SequenceExample>) -> Result<Self> {
        schema.validate()?;
        let widths = schema.widths();
        for (i, ex) in examples.iter().enumerate() {
            if ex.labels.len() != widths.len() {
                return Err(Error::Input(format!(
                    "example {i} has {} labels for {} tasks",
                    ex.labels.len(),
                    widths.len()
                )));
            }
            if let Some((t, &l)) = ex.labels.iter().enumerate().find(|(t, &l)| l >= widths[*t]) {
                return Err(Error::Input(format!(
                    "example {i}: label {l} out of range for task {}",
                    schema.tasks[t].name
                )));
            }
            if ex.tokens.first() != Some(&CLS_ID) {
                return Err(Error::Input(format!("example {i} does not start with [CLS]")));
            }
        }
        Ok(SequenceDataset { schema, examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Labels of one task, in example order.
    pub fn task_labels(&self, task: &str) -> Result<Vec<usize>> {
        let t = self
            .schema
            .index_of(task)
            .ok_or_else(|| Error::Input(format!("unknown task {task}; valid: {:?}", self.schema.names())))?;
        Ok(self.examples.iter().map(|e| e.labels[t]).collect())
    }

    /// The dataset restricted to one task.
    pub fn only(&self, task: &str) -> Result<SequenceDataset> {
        let schema = self.schema.only(task)?;
        let t = self.schema.index_of(task).expect("checked by only");
        let examples = self
            .examples
            .iter()
            .map(|e| SequenceExample { tokens: e.tokens.clone(), labels: vec![e.labels[t]] })
            .collect();
        Ok(SequenceDataset { schema, examples })
    }

    pub fn subset(&self, indices: &[usize]) -> SequenceDataset {
        SequenceDataset {
            schema: self.schema.clone(),
            examples: indices.iter().map(|&i| self.examples[i].clone()).collect(),
        }
    }
}

/// One tagging input: token ids starting with `[CLS]` and one tag per
/// token (the tag at the `[CLS]` position is ignored).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenExample {
    pub tokens: Vec<u32>,
    pub tags: Vec<usize>,
}

impl TokenExample {
    pub fn validate(&self, n_tags: usize) -> Result<()> {
        if self.tokens.len() != self.tags.len() {
            return Err(Error::Input(format!(
                "{} tokens but {} tags",
                self.tokens.len(),
                self.tags.len()
            )));
        }
        if self.tokens.first() != Some(&CLS_ID) {
            return Err(Error::Input("tagging example does not start with [CLS]".into()));
        }
        if let Some(&t) = self.tags.iter().find(|&&t| t >= n_tags) {
            return Err(Error::Input(format!("tag {t} out of range")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_missing_label() {
        let ex = vec![SequenceExample { tokens: vec![0, 5], labels: vec![0, 1] }];
        let err = SequenceDataset::new(MultiTaskSchema::lumbar(), ex).unwrap_err();
        assert!(err.to_string().contains("2 labels for 3 tasks"));
    }

    #[test]
    fn rejects_out_of_range_label() {
        let ex = vec![SequenceExample { tokens: vec![0, 5], labels: vec![0, 1, 2] }];
        assert!(SequenceDataset::new(MultiTaskSchema::lumbar(), ex).is_err());
    }

    #[test]
    fn restriction() {
        let ex = vec![SequenceExample { tokens: vec![0, 5], labels: vec![2, 1, 0] }];
        let ds = SequenceDataset::new(MultiTaskSchema::lumbar(), ex).unwrap();
        let only = ds.only("disc").unwrap();
        assert_eq!(only.examples[0].labels, vec![1]);
        assert_eq!(only.schema.names(), vec!["disc"]);
        assert!(ds.only("cord").is_err());
    }
}
