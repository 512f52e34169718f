use super::{expect_dim, expect_rank};
use crate::tensor::{Element, Result, Tensor, TensorError};

/// Row-wise log-softmax of an `n×C` matrix, stabilised by max subtraction.
pub fn log_softmax<T: Element>(input: &Tensor<T>) -> Result<Tensor<T>> {
    const OP: &str = "log_softmax";
    expect_rank(OP, input, 2)?;
    let classes = input.shape()[1];
    let mut data = input.to_vec();
    for row in data.chunks_mut(classes) {
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = row.iter().map(|&v| (v - max).exp()).sum::<T>().ln() + max;
        row.iter_mut().for_each(|v| *v -= lse);
    }
    Tensor::from_op(OP, input.shape().to_vec(), data, vec![input.clone()], move |out, g| {
        let mut dx = vec![T::zero(); g.len()];
        for ((dr, orow), grow) in dx.chunks_mut(classes).zip(out.chunks(classes)).zip(g.chunks(classes)) {
            let gsum: T = grow.iter().copied().sum();
            for ((d, &o), &gi) in dr.iter_mut().zip(orow).zip(grow) {
                *d = gi - o.exp() * gsum;
            }
        }
        vec![Some(dx)]
    })
}

/// `−Σ_j weights[targets[j]] · logp[j, targets[j]]` as a `[1]` tensor.
pub fn nll_weighted<T: Element>(logp: &Tensor<T>, targets: &[usize], weights: &[T]) -> Result<Tensor<T>> {
    const OP: &str = "nll_weighted";
    expect_rank(OP, logp, 2)?;
    let (n, classes) = (logp.shape()[0], logp.shape()[1]);
    expect_dim(OP, "targets length", n, targets.len())?;
    expect_dim(OP, "class weights length", classes, weights.len())?;
    if let Some((j, &y)) = targets.iter().enumerate().find(|(_, &y)| y >= classes) {
        return Err(TensorError::InvalidArgument {
            op: OP,
            message: format!("target {y} at row {j} outside 0..{classes}"),
        });
    }
    let lp = logp.data();
    let loss = -targets
        .iter()
        .enumerate()
        .map(|(j, &y)| weights[y] * lp[j * classes + y])
        .sum::<T>();
    drop(lp);
    let targets = targets.to_vec();
    let weights = weights.to_vec();
    Tensor::from_op(OP, vec![1], vec![loss], vec![logp.clone()], move |_, g| {
        let mut d = vec![T::zero(); n * classes];
        for (j, &y) in targets.iter().enumerate() {
            d[j * classes + y] = -weights[y] * g[0];
        }
        vec![Some(d)]
    })
}
