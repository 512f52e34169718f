use super::TrainError;

/// `base · (1 − iter/max_iter)^power`.
pub fn poly_lr(base: f64, iter: u64, max_iter: u64, power: f64) -> Result<f64, TrainError> {
    if max_iter == 0 {
        return Err(TrainError::Config("poly schedule needs max_iter > 0".into()));
    }
    if iter > max_iter {
        return Err(TrainError::Config(format!(
            "iteration {iter} beyond max_iter {max_iter}"
        )));
    }
    Ok(base * (1.0 - iter as f64 / max_iter as f64).powf(power))
}

/// Scheduled iterations per epoch: `ceil(train_size / batch_size)`.
pub fn batches_per_epoch(train_size: usize, batch_size: usize) -> u64 {
    train_size.div_ceil(batch_size.max(1)) as u64
}

/// Schedule horizon: `epochs · ceil(train_size / batch_size)`.
pub fn max_iterations(epochs: usize, train_size: usize, batch_size: usize) -> u64 {
    epochs as u64 * batches_per_epoch(train_size, batch_size)
}
