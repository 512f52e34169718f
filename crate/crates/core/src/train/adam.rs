use super::TrainError;
use crate::arch::{Model, NamedArray, OptimizerSnapshot};
use crate::tensor::{Element, Tensor};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment accumulators, one pair per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState<T> {
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

const M_SUFFIX: &str = ".adam_m";
const V_SUFFIX: &str = ".adam_v";

impl<T: Element> OptimizerState<T> {
    pub fn new(params: &[Tensor<T>]) -> Self {
        Self {
            step: 0,
            m: params.iter().map(|p| vec![T::zero(); p.numel()]).collect(),
            v: params.iter().map(|p| vec![T::zero(); p.numel()]).collect(),
        }
    }

    pub fn to_snapshot(&self, model: &Model<T>) -> OptimizerSnapshot<T> {
        let mut arrays = Vec::with_capacity(2 * self.m.len());
        for (i, (name, p)) in model.named_parameters().enumerate() {
            for (suffix, values) in [(M_SUFFIX, &self.m[i]), (V_SUFFIX, &self.v[i])] {
                arrays.push(NamedArray {
                    name: format!("{name}{suffix}"),
                    dims: p.shape().to_vec(),
                    values: values.clone(),
                });
            }
        }
        OptimizerSnapshot {
            step: self.step,
            arrays,
        }
    }

    pub fn from_snapshot(model: &Model<T>, snap: &OptimizerSnapshot<T>) -> Result<Self, TrainError> {
        let mut state = Self::new(model.parameters());
        state.step = snap.step;
        let mut arrays = snap.arrays.iter();
        for (i, (name, p)) in model.named_parameters().enumerate() {
            for (suffix, slot) in [(M_SUFFIX, &mut state.m[i]), (V_SUFFIX, &mut state.v[i])] {
                let want = format!("{name}{suffix}");
                let a = arrays
                    .next()
                    .filter(|a| a.name == want && a.dims == p.shape())
                    .ok_or_else(|| TrainError::Config(format!("optimizer state does not match parameter {want}")))?;
                *slot = a.values.clone();
            }
        }
        if arrays.next().is_some() {
            return Err(TrainError::Config("optimizer state has extra arrays".into()));
        }
        Ok(state)
    }
}

/// One bias-corrected Adam update of every parameter, in place.
pub fn adam_step<T: Element>(
    params: &[Tensor<T>],
    state: &mut OptimizerState<T>,
    lr: f64,
    hp: AdamParams,
) -> Result<(), TrainError> {
    let grads = params
        .iter()
        .enumerate()
        .map(|(i, p)| p.grad().ok_or(TrainError::MissingGradient(i)))
        .collect::<Result<Vec<_>, _>>()?;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - hp.beta1.powi(t);
    let c2 = 1.0 - hp.beta2.powi(t);
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        let mut data = p.data_mut();
        for j in 0..g.len() {
            let gj = g[j].as_f64();
            let mj = hp.beta1 * m[j].as_f64() + (1.0 - hp.beta1) * gj;
            let vj = hp.beta2 * v[j].as_f64() + (1.0 - hp.beta2) * gj * gj;
            m[j] = T::of(mj);
            v[j] = T::of(vj);
            let update = lr * (mj / c1) / ((vj / c2).sqrt() + hp.eps);
            data[j] = T::of(data[j].as_f64() - update);
        }
    }
    Ok(())
}
