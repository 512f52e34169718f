use super::{ClassWeights, ObjectiveError};
use crate::tensor::{ops, Element, Tensor};

/// Ordered task set with per-task loss weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub tasks: Vec<Task>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub name: String,
    pub labels: Vec<String>,
    pub alpha: f64,
}

impl TaskSpec {
    pub fn new(tasks: Vec<Task>) -> Result<Self, ObjectiveError> {
        let spec = Self { tasks };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if self.tasks.is_empty() {
            return Err(ObjectiveError::InvalidTaskSpec("at least one task is required".into()));
        }
        if self.tasks.iter().any(|t| !t.alpha.is_finite() || t.alpha < 0.0) {
            return Err(ObjectiveError::InvalidTaskSpec(
                "task weights must be finite and non-negative".into(),
            ));
        }
        if self.tasks.iter().all(|t| t.alpha == 0.0) {
            return Err(ObjectiveError::InvalidTaskSpec(
                "at least one task weight must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.tasks.iter().map(|t| t.alpha).collect()
    }
}

/// `−Σ_j w[y_j] · log softmax(logits_j)[y_j]`, summed over the batch.
pub fn weighted_cross_entropy<T: Element>(
    logits: &Tensor<T>,
    targets: &[usize],
    weights: &ClassWeights,
) -> Result<Tensor<T>, ObjectiveError> {
    if logits.rank() == 2 && logits.shape()[1] != weights.classes() {
        return Err(ObjectiveError::ClassCount {
            logits: logits.shape()[1],
            weights: weights.classes(),
        });
    }
    if let Some(&y) = targets.iter().find(|&&y| y >= weights.classes()) {
        return Err(ObjectiveError::LabelOutOfRange {
            label: y,
            classes: weights.classes(),
        });
    }
    let w: Vec<T> = weights.weights.iter().map(|&v| T::of(v)).collect();
    let logp = ops::log_softmax(logits)?;
    Ok(ops::nll_weighted(&logp, targets, &w)?)
}

/// `Σ_i α_i ℓ_i`.
pub fn joint_loss<T: Element>(task_losses: &[Tensor<T>], spec: &TaskSpec) -> Result<Tensor<T>, ObjectiveError> {
    if task_losses.len() != spec.tasks.len() {
        return Err(ObjectiveError::TaskCount {
            expected: spec.tasks.len(),
            actual: task_losses.len(),
        });
    }
    let mut total: Option<Tensor<T>> = None;
    for (loss, task) in task_losses.iter().zip(&spec.tasks) {
        let term = ops::mul_const(loss, T::of(task.alpha))?;
        total = Some(match total {
            Some(t) => ops::add(&t, &term)?,
            None => term,
        });
    }
    Ok(total.expect("non-empty task list"))
}
