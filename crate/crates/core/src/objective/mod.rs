//! Class-weighted multi-task objective and classification metrics.

mod loss;
mod metrics;
mod report;
mod weights;

pub use loss::{joint_loss, weighted_cross_entropy, Task, TaskSpec};
pub use metrics::{precision_recall_f1, ClassificationMetrics, Prf};
pub use report::{
    multi_task_report, render_comparison, ComparisonRow, MetricsReport, TaskMetrics, COMPARISON_HEADER, TABLE_HEADER,
};
pub use weights::{class_weights, ClassWeights};

use crate::tensor::TensorError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObjectiveError {
    #[error("class counts sum to zero")]
    EmptyCounts,
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("logits have {logits} classes but weights cover {weights}")]
    ClassCount { logits: usize, weights: usize },
    #[error("expected {expected} task losses, got {actual}")]
    TaskCount { expected: usize, actual: usize },
    #[error("{preds} predictions for {targets} targets")]
    LengthMismatch { preds: usize, targets: usize },
    #[error("invalid task spec: {0}")]
    InvalidTaskSpec(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
