use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::ImageSet;
use super::trainer::task_spec;
use super::TrainError;
use crate::arch::Model;
use crate::data::{batch_tensor, Image};
use crate::objective::{multi_task_report, precision_recall_f1, MetricsReport, TaskMetrics};
use crate::tensor::{no_grad, Element, Mode, Tensor};

fn argmax_rows<T: Element>(logits: &Tensor<T>) -> Vec<usize> {
    let c = logits.shape()[1];
    logits
        .data()
        .chunks(c)
        .map(|row| {
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Eval-mode forward over the set (no augmentation), arg-max per head and
/// precision/recall/F1 per task.
pub fn evaluate<T: Element>(
    model: &Model<T>,
    set: &ImageSet,
    split: &str,
    batch_size: usize,
) -> Result<MetricsReport, TrainError> {
    if set.is_empty() {
        return Err(TrainError::EmptySplit(split.to_string()));
    }
    // eval-mode dropout is the identity and never draws
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut pc, mut pf) = (Vec::with_capacity(set.len()), Vec::with_capacity(set.len()));
    no_grad(|| -> Result<(), TrainError> {
        for chunk in set.images.chunks(batch_size.max(1)) {
            let logits = model.forward(&batch_tensor::<T>(chunk), Mode::Eval, &mut rng)?;
            pc.extend(argmax_rows(&logits.cuisine));
            pf.extend(argmax_rows(&logits.flavor));
        }
        Ok(())
    })?;
    let mc = model.config();
    let spec = task_spec(mc.num_cuisines, mc.num_flavors, [1.0, 1.0])?;
    let tasks = [(&pc, &set.cuisine, mc.num_cuisines), (&pf, &set.flavor, mc.num_flavors)]
        .into_iter()
        .zip(spec.tasks)
        .map(|((p, y, classes), task)| {
            Ok(TaskMetrics {
                name: task.name,
                class_names: task.labels,
                metrics: precision_recall_f1(p, y, classes)?,
            })
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    Ok(multi_task_report(split, tasks))
}

/// Arg-max label and softmax distribution of each head for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub cuisine: usize,
    pub flavor: usize,
    pub cuisine_probs: Vec<f64>,
    pub flavor_probs: Vec<f64>,
}

fn softmax(row: &[f64]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn predict<T: Element>(model: &Model<T>, image: &Image) -> Result<Prediction, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let logits = no_grad(|| model.forward(&batch_tensor::<T>(std::slice::from_ref(image)), Mode::Eval, &mut rng))?;
    let row = |t: &Tensor<T>| t.to_vec().iter().map(|v| v.as_f64()).collect::<Vec<f64>>();
    let cuisine_probs = softmax(&row(&logits.cuisine));
    let flavor_probs = softmax(&row(&logits.flavor));
    let arg = |p: &[f64]| (0..p.len()).fold(0, |b, j| if p[j] > p[b] { j } else { b });
    Ok(Prediction {
        cuisine: arg(&cuisine_probs),
        flavor: arg(&flavor_probs),
        cuisine_probs,
        flavor_probs,
    })
}
