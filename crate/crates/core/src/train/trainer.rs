use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use super::adam::{adam_step, OptimizerState};
use super::dataset::{parallel_map, ImageSet};
use super::eval::evaluate;
use super::schedule::{max_iterations, poly_lr};
use super::{TrainConfig, TrainError};
use crate::arch::{save_checkpoint, Model};
use crate::data::{augment, batch_tensor, Image, CUISINES, FLAVORS};
use crate::objective::{joint_loss, weighted_cross_entropy, ClassWeights, MetricsReport, Task, TaskSpec};
use crate::rng;
use crate::tensor::{ops, Element, Mode};

pub const LOG_HEADER: &str = "epoch\titeration\tlr\tloss_cuisine\tloss_flavor\tloss_joint";

/// Losses of one optimizer step, normalized by the batch size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchRecord {
    pub iteration: u64,
    pub lr: f64,
    pub size: usize,
    pub task_losses: [f64; 2],
    pub joint: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochSummary {
    /// 1-based.
    pub epoch: usize,
    pub batches: Vec<BatchRecord>,
    /// Sample-weighted means over the epoch's batches.
    pub task_losses: [f64; 2],
    pub joint: f64,
    /// Scheduled iterations consumed so far.
    pub iteration: u64,
    /// Trailing single-sample batches that were skipped.
    pub skipped: usize,
}

impl EpochSummary {
    pub fn lr_trace(&self) -> Vec<f64> {
        self.batches.iter().map(|b| b.lr).collect()
    }

    pub fn log_line(&self) -> String {
        let lr = self.batches.last().map_or(0.0, |b| b.lr);
        format!(
            "{}\t{}\t{:.6e}\t{:.8}\t{:.8}\t{:.8}",
            self.epoch, self.iteration, lr, self.task_losses[0], self.task_losses[1], self.joint
        )
    }
}

fn label_names(vocab: &[&str], classes: usize) -> Vec<String> {
    if vocab.len() == classes {
        vocab.iter().map(|s| s.to_string()).collect()
    } else {
        (0..classes).map(|c| format!("class{c}")).collect()
    }
}

/// Task spec of the two heads with the configured loss weights.
pub(crate) fn task_spec(num_cuisines: usize, num_flavors: usize, alphas: [f64; 2]) -> Result<TaskSpec, TrainError> {
    Ok(TaskSpec::new(vec![
        Task {
            name: "cuisine".into(),
            labels: label_names(&CUISINES, num_cuisines),
            alpha: alphas[0],
        },
        Task {
            name: "flavor".into(),
            labels: label_names(&FLAVORS, num_flavors),
            alpha: alphas[1],
        },
    ])?)
}

/// Owns the optimizer state and the global iteration counter of one run.
pub struct Trainer<'m, T: Element> {
    model: &'m Model<T>,
    config: TrainConfig,
    tasks: TaskSpec,
    weights: [ClassWeights; 2],
    state: OptimizerState<T>,
    max_iter: u64,
    iteration: u64,
    epoch: usize,
}

impl<'m, T: Element> Trainer<'m, T> {
    /// Class weights come from the training labels; the schedule horizon
    /// from the training set size.
    pub fn new(model: &'m Model<T>, config: TrainConfig, train: &ImageSet) -> Result<Self, TrainError> {
        config.validate()?;
        if train.is_empty() {
            return Err(TrainError::EmptySplit("train".into()));
        }
        let mc = model.config();
        let tasks = task_spec(mc.num_cuisines, mc.num_flavors, config.alphas)?;
        let weights = [
            ClassWeights::from_labels(&train.cuisine, mc.num_cuisines)?,
            ClassWeights::from_labels(&train.flavor, mc.num_flavors)?,
        ];
        Ok(Self {
            model,
            max_iter: max_iterations(config.epochs, train.len(), config.batch_size),
            config,
            tasks,
            weights,
            state: OptimizerState::new(model.parameters()),
            iteration: 0,
            epoch: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn class_weights(&self) -> &[ClassWeights; 2] {
        &self.weights
    }

    pub fn optimizer_state(&self) -> &OptimizerState<T> {
        &self.state
    }

    pub fn max_iter(&self) -> u64 {
        self.max_iter
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    fn assemble(&self, train: &ImageSet, indices: &[usize]) -> Vec<Image> {
        let (seed, epoch) = (self.config.seed, self.epoch as u64);
        parallel_map(indices.len(), self.config.workers, |k| {
            let i = indices[k];
            if self.config.augment {
                let mut r = rng::substream(seed, rng::AUGMENT, (epoch << 32) | i as u64);
                augment(&train.images[i], &mut r)
            } else {
                train.images[i].clone()
            }
        })
    }

    fn step(&mut self, train: &ImageSet, indices: &[usize], lr: f64) -> Result<BatchRecord, TrainError> {
        let n = indices.len();
        let batch = batch_tensor::<T>(&self.assemble(train, indices));
        let yc: Vec<usize> = indices.iter().map(|&i| train.cuisine[i]).collect();
        let yf: Vec<usize> = indices.iter().map(|&i| train.flavor[i]).collect();
        let mut dropout_rng = rng::substream(self.config.seed, rng::DROPOUT, self.iteration);
        let logits = self.model.forward(&batch, Mode::Train, &mut dropout_rng)?;
        let lc = weighted_cross_entropy(&logits.cuisine, &yc, &self.weights[0])?;
        let lf = weighted_cross_entropy(&logits.flavor, &yf, &self.weights[1])?;
        let task_losses = [lc.item().as_f64() / n as f64, lf.item().as_f64() / n as f64];
        let joint = joint_loss(&[lc, lf], &self.tasks)?;
        let loss = ops::mul_const(&joint, T::of(1.0 / n as f64))?;
        let record = BatchRecord {
            iteration: self.iteration,
            lr,
            size: n,
            task_losses,
            joint: loss.item().as_f64(),
        };
        if !(record.joint.is_finite() && task_losses.iter().all(|l| l.is_finite())) {
            return Err(TrainError::NonFinite {
                epoch: self.epoch + 1,
                batch: 0,
                iteration: self.iteration,
                detail: "loss".into(),
                losses: self.named_losses(task_losses),
            });
        }
        loss.backward()?;
        drop(loss);
        adam_step(self.model.parameters(), &mut self.state, lr, self.config.adam)?;
        self.model.zero_grad();
        Ok(record)
    }

    fn named_losses(&self, losses: [f64; 2]) -> Vec<(String, f64)> {
        self.tasks
            .tasks
            .iter()
            .zip(losses)
            .map(|(t, l)| (t.name.clone(), l))
            .collect()
    }

    /// One pass over the seeded shuffle of the training set. A trailing
    /// batch of one sample is skipped (train-mode batch norm needs two), but
    /// its scheduled iteration is still consumed.
    pub fn train_epoch(&mut self, train: &ImageSet) -> Result<EpochSummary, TrainError> {
        if train.is_empty() {
            return Err(TrainError::EmptySplit("train".into()));
        }
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut rng::substream(self.config.seed, rng::SHUFFLE, self.epoch as u64));
        let mut batches = Vec::new();
        let mut skipped = 0;
        for (b, chunk) in order.chunks(self.config.batch_size).enumerate() {
            let lr = poly_lr(
                self.config.base_lr,
                self.iteration,
                self.max_iter,
                self.config.poly_power,
            )?;
            if chunk.len() < 2 && train.len() > 1 {
                skipped += 1;
            } else {
                let record = self.step(train, chunk, lr).map_err(|e| match e {
                    TrainError::NonFinite {
                        epoch,
                        iteration,
                        detail,
                        losses,
                        ..
                    } => TrainError::NonFinite {
                        epoch,
                        batch: b,
                        iteration,
                        detail,
                        losses,
                    },
                    other => match other.non_finite_op() {
                        Some(op) => TrainError::NonFinite {
                            epoch: self.epoch + 1,
                            batch: b,
                            iteration: self.iteration,
                            detail: format!("non-finite value produced by {op}"),
                            losses: Vec::new(),
                        },
                        None => other,
                    },
                })?;
                batches.push(record);
            }
            self.iteration += 1;
        }
        self.epoch += 1;
        let total: usize = batches.iter().map(|b| b.size).sum();
        let mean = |f: &dyn Fn(&BatchRecord) -> f64| {
            batches.iter().map(|b| f(b) * b.size as f64).sum::<f64>() / total.max(1) as f64
        };
        Ok(EpochSummary {
            epoch: self.epoch,
            task_losses: [mean(&|b| b.task_losses[0]), mean(&|b| b.task_losses[1])],
            joint: mean(&|b| b.joint),
            batches,
            iteration: self.iteration,
            skipped,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        save_checkpoint(self.model, Some(&self.state.to_snapshot(self.model)), path)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub epochs: Vec<EpochSummary>,
    pub checkpoints: Vec<PathBuf>,
    /// `(epoch, report)` for each validation pass.
    pub evaluations: Vec<(usize, MetricsReport)>,
}

pub fn checkpoint_name(epoch: usize) -> String {
    format!("checkpoint_epoch{epoch:04}.cnet")
}

/// Runs all configured epochs, appending one line per epoch to `log`,
/// saving checkpoints into `checkpoint_dir` (every `checkpoint_every`
/// epochs and after the last) and evaluating `val` when given.
pub fn fit<T: Element>(
    model: &Model<T>,
    config: &TrainConfig,
    train: &ImageSet,
    val: Option<&ImageSet>,
    checkpoint_dir: Option<&Path>,
    mut log: Option<&mut dyn Write>,
) -> Result<FitResult, TrainError> {
    let mut trainer = Trainer::new(model, config.clone(), train)?;
    let io = |path: &Path, e: std::io::Error| TrainError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    if let Some(w) = log.as_deref_mut() {
        writeln!(w, "{LOG_HEADER}").map_err(|e| io(Path::new("<log>"), e))?;
    }
    let mut result = FitResult {
        epochs: Vec::new(),
        checkpoints: Vec::new(),
        evaluations: Vec::new(),
    };
    let due = |every: usize, epoch: usize| epoch == config.epochs || (every > 0 && epoch.is_multiple_of(every));
    for _ in 0..config.epochs {
        let summary = trainer.train_epoch(train)?;
        let epoch = summary.epoch;
        if let Some(w) = log.as_deref_mut() {
            writeln!(w, "{}", summary.log_line()).map_err(|e| io(Path::new("<log>"), e))?;
        }
        result.epochs.push(summary);
        if let Some(dir) = checkpoint_dir {
            if due(config.checkpoint_every, epoch) {
                let path = dir.join(checkpoint_name(epoch));
                trainer.save(&path)?;
                result.checkpoints.push(path);
            }
        }
        if let Some(val) = val.filter(|v| !v.is_empty()) {
            if due(config.eval_every, epoch) {
                let report = evaluate(model, val, "val", config.batch_size)?;
                if let Some(w) = log.as_deref_mut() {
                    let a = report.averaged;
                    writeln!(
                        w,
                        "# eval epoch={epoch} split=val precision={:.6} recall={:.6} f1={:.6}",
                        a.precision, a.recall, a.f1
                    )
                    .map_err(|e| io(Path::new("<log>"), e))?;
                }
                result.evaluations.push((epoch, report));
            }
        }
    }
    Ok(result)
}
