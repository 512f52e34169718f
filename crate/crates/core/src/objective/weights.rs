use super::ObjectiveError;

/// Frequency-derived class weights `w_y = 1 − N_y / N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights {
    pub counts: Vec<usize>,
    pub total: usize,
    pub weights: Vec<f64>,
}

impl ClassWeights {
    /// Weights from per-label counts (indexed by label).
    pub fn from_counts(counts: &[usize]) -> Result<Self, ObjectiveError> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(ObjectiveError::EmptyCounts);
        }
        let weights = counts.iter().map(|&c| 1.0 - c as f64 / total as f64).collect();
        Ok(Self {
            counts: counts.to_vec(),
            total,
            weights,
        })
    }

    /// Weights from a label sequence over `classes` labels.
    pub fn from_labels(labels: &[usize], classes: usize) -> Result<Self, ObjectiveError> {
        let mut counts = vec![0; classes];
        for &y in labels {
            *counts
                .get_mut(y)
                .ok_or(ObjectiveError::LabelOutOfRange { label: y, classes })? += 1;
        }
        Self::from_counts(&counts)
    }

    /// All-ones weights, i.e. plain cross-entropy.
    pub fn uniform(classes: usize) -> Self {
        Self {
            counts: vec![0; classes],
            total: 0,
            weights: vec![1.0; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.weights.len()
    }
}

/// [`ClassWeights::from_counts`].
pub fn class_weights(counts: &[usize]) -> Result<ClassWeights, ObjectiveError> {
    ClassWeights::from_counts(counts)
}
