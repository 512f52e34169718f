use super::ObjectiveError;

/// Precision, recall and F1 as fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f1 }
    }

    /// Unweighted mean of each component.
    pub fn mean(items: &[Prf]) -> Prf {
        if items.is_empty() {
            return Prf::default();
        }
        let n = items.len() as f64;
        Prf {
            precision: items.iter().map(|p| p.precision).sum::<f64>() / n,
            recall: items.iter().map(|p| p.recall).sum::<f64>() / n,
            f1: items.iter().map(|p| p.f1).sum::<f64>() / n,
        }
    }
}

/// Per-class and macro-averaged scores of one classification task.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationMetrics {
    /// `confusion[target][prediction]`.
    pub confusion: Vec<Vec<usize>>,
    pub per_class: Vec<Prf>,
    pub macro_avg: Prf,
}

impl ClassificationMetrics {
    pub fn accuracy(&self) -> f64 {
        let total: usize = self.confusion.iter().flatten().sum();
        if total == 0 {
            return 0.0;
        }
        let correct: usize = (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum();
        correct as f64 / total as f64
    }
}

/// Per-class precision/recall/F1 and their macro averages. Classes whose
/// denominator is zero (never predicted or never present) score 0.
pub fn precision_recall_f1(
    preds: &[usize],
    targets: &[usize],
    classes: usize,
) -> Result<ClassificationMetrics, ObjectiveError> {
    if preds.len() != targets.len() {
        return Err(ObjectiveError::LengthMismatch {
            preds: preds.len(),
            targets: targets.len(),
        });
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &t) in preds.iter().zip(targets) {
        let label = p.max(t);
        if label >= classes {
            return Err(ObjectiveError::LabelOutOfRange { label, classes });
        }
        confusion[t][p] += 1;
    }
    let per_class: Vec<Prf> = (0..classes)
        .map(|c| {
            let tp = confusion[c][c];
            let fp = (0..classes).map(|t| confusion[t][c]).sum::<usize>() - tp;
            let fn_ = confusion[c].iter().sum::<usize>() - tp;
            Prf::from_counts(tp, fp, fn_)
        })
        .collect();
    let macro_avg = Prf::mean(&per_class);
    Ok(ClassificationMetrics {
        confusion,
        per_class,
        macro_avg,
    })
}
