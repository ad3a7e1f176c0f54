use serde::{Deserialize, Serialize};

/// Classification task. Binary models emit one logit, multiclass models one
/// logit per class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Binary,
    Multiclass { classes: usize },
}

impl Task {
    /// Number of logits a model for this task produces.
    pub fn outputs(self) -> usize {
        match self {
            Task::Binary => 1,
            Task::Multiclass { classes } => classes,
        }
    }

    /// Number of distinct labels.
    pub fn classes(self) -> usize {
        match self {
            Task::Binary => 2,
            Task::Multiclass { classes } => classes,
        }
    }
}
