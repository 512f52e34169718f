use parking_lot::Mutex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::plan::{Bottleneck, ConvBn, Dense, Init, Plan, BN_EPS, BN_MOMENTUM};
use super::{ArchError, ModelConfig};
use crate::rng;
use crate::tensor::ops::{self, RunningStats};
use crate::tensor::{Element, Mode, Tensor};

/// Raw class scores of both heads.
#[derive(Debug, Clone)]
pub struct HeadLogits<T: Element> {
    pub cuisine: Tensor<T>,
    pub flavor: Tensor<T>,
}

/// The network: a [`Plan`] plus allocated parameters and batch-norm state.
pub struct Model<T: Element> {
    plan: Plan,
    params: Vec<Tensor<T>>,
    running: Vec<Mutex<RunningStats<T>>>,
}

impl<T: Element> Model<T> {
    /// Allocates and initializes every parameter from `seed`. Each parameter
    /// draws from its own substream, so values depend only on `(config, seed)`.
    pub fn new(config: &ModelConfig, seed: u64) -> Result<Self, ArchError> {
        let plan = Plan::new(config)?;
        let params = plan
            .params
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let numel: usize = spec.shape.iter().product();
                let mut r = rng::substream(seed, rng::INIT, i as u64);
                let data: Vec<T> = match spec.init {
                    Init::KaimingNormal { fan_in } => {
                        let std = (2.0 / fan_in as f64).sqrt();
                        (0..numel)
                            .map(|_| {
                                let z: f64 = StandardNormal.sample(&mut r);
                                T::of(z * std)
                            })
                            .collect()
                    }
                    Init::FanInUniform { fan_in } => {
                        let bound = 1.0 / (fan_in as f64).sqrt();
                        (0..numel).map(|_| T::of(r.random_range(-bound..bound))).collect()
                    }
                    Init::Ones => vec![T::one(); numel],
                    Init::Zeros => vec![T::zero(); numel],
                };
                Tensor::leaf(&spec.shape, data, true)
            })
            .collect::<Result<_, _>>()?;
        let running = plan
            .batch_norms
            .iter()
            .map(|bn| Mutex::new(RunningStats::new(bn.channels)))
            .collect();
        Ok(Self { plan, params, running })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.plan.config
    }

    pub fn plan(&self) -> &Plan {
        &self.plan
    }

    /// Parameters in plan order with their names.
    pub fn named_parameters(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.plan.params.iter().map(|s| s.name.as_str()).zip(&self.params)
    }

    pub fn parameters(&self) -> &[Tensor<T>] {
        &self.params
    }

    pub fn parameter(&self, name: &str) -> Option<&Tensor<T>> {
        self.named_parameters().find(|(n, _)| *n == name).map(|(_, t)| t)
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(Tensor::numel).sum()
    }

    pub fn zero_grad(&self) {
        self.params.iter().for_each(Tensor::zero_grad);
    }

    /// Batch-norm layer names with a snapshot of their running statistics.
    pub fn running_stats(&self) -> Vec<(String, RunningStats<T>)> {
        self.plan
            .batch_norms
            .iter()
            .zip(&self.running)
            .map(|(spec, s)| (spec.name.clone(), s.lock().clone()))
            .collect()
    }

    pub(crate) fn set_running_stats(&self, index: usize, stats: RunningStats<T>) {
        *self.running[index].lock() = stats;
    }

    /// Effective (softmax) weights of the two aggregation sites.
    pub fn aggregation_weights(&self) -> [[f64; 2]; 2] {
        let eff = |idx: usize| {
            let l = self.params[idx].to_vec();
            let (a, b) = (l[0].as_f64(), l[1].as_f64());
            let m = a.max(b);
            let (ea, eb) = ((a - m).exp(), (b - m).exp());
            [ea / (ea + eb), eb / (ea + eb)]
        };
        [eff(self.plan.stem.agg1), eff(self.plan.stem.agg2)]
    }

    fn conv_bn(&self, x: &Tensor<T>, layer: &ConvBn, mode: Mode) -> Result<Tensor<T>, ArchError> {
        let y = ops::conv2d(x, &self.params[layer.weight], None, layer.conv)?;
        let y = {
            let mut stats = self.running[layer.stats].lock();
            ops::batch_norm2d(
                &y,
                &self.params[layer.gamma],
                &self.params[layer.beta],
                &mut stats,
                mode,
                BN_EPS,
                BN_MOMENTUM,
            )?
        };
        Ok(if layer.relu { ops::relu(&y)? } else { y })
    }

    /// Softmax-weighted sum of two branches.
    fn aggregate(&self, a: &Tensor<T>, b: &Tensor<T>, logits: usize) -> Result<Tensor<T>, ArchError> {
        let logits = ops::reshape(&self.params[logits], &[1, 2])?;
        let weights = ops::exp(&ops::log_softmax(&logits)?)?;
        let wa = ops::mul_scalar(a, &ops::select(&weights, 0)?)?;
        let wb = ops::mul_scalar(b, &ops::select(&weights, 1)?)?;
        Ok(ops::add(&wa, &wb)?)
    }

    fn dense(&self, x: &Tensor<T>, layer: &Dense) -> Result<Tensor<T>, ArchError> {
        Ok(ops::linear(x, &self.params[layer.weight], &self.params[layer.bias])?)
    }

    fn check_input(&self, batch: &Tensor<T>) -> Result<(), ArchError> {
        let size = self.plan.config.input_size;
        let s = batch.shape();
        if s.len() != 4 || s[1] != 3 || s[2] != size || s[3] != size {
            return Err(ArchError::InvalidInput(format!(
                "expected a batch shaped n×3×{size}×{size}, got {s:?}"
            )));
        }
        if batch.data().iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
            return Err(ArchError::InvalidInput("pixel values must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Dual-kernel stem: two aggregated branch pairs around a stride-2 1×1
    /// reduction, then a 1×1 mixing conv.
    pub fn stem(&self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, ArchError> {
        let st = &self.plan.stem;
        let a = self.conv_bn(x, &st.conv1, mode)?;
        let b = self.conv_bn(x, &st.conv2, mode)?;
        let x = self.aggregate(&a, &b, st.agg1)?;
        let x = self.conv_bn(&x, &st.conv3, mode)?;
        let a = self.conv_bn(&x, &st.conv4, mode)?;
        let b = self.conv_bn(&x, &st.conv5, mode)?;
        let x = self.aggregate(&a, &b, st.agg2)?;
        self.conv_bn(&x, &st.conv6, mode)
    }

    fn unit_forward(&self, x: &Tensor<T>, unit: &Bottleneck, mode: Mode) -> Result<Tensor<T>, ArchError> {
        let y = self.conv_bn(x, &unit.reduce, mode)?;
        let y = self.conv_bn(&y, &unit.spatial, mode)?;
        let y = self.conv_bn(&y, &unit.expand, mode)?;
        let skip = match &unit.projection {
            Some(p) => self.conv_bn(x, p, mode)?,
            None => x.clone(),
        };
        Ok(ops::relu(&ops::add(&y, &skip)?)?)
    }

    fn stage_units(&self, stage: usize) -> Result<&[Bottleneck], ArchError> {
        self.plan
            .stages
            .get(stage)
            .map(Vec::as_slice)
            .ok_or_else(|| ArchError::InvalidInput(format!("no residual stage {stage}")))
    }

    /// A single bottleneck unit of residual stage `stage` (0-based).
    pub fn bottleneck_unit(
        &self,
        x: &Tensor<T>,
        stage: usize,
        unit: usize,
        mode: Mode,
    ) -> Result<Tensor<T>, ArchError> {
        let units = self.stage_units(stage)?;
        let u = units
            .get(unit)
            .ok_or_else(|| ArchError::InvalidInput(format!("stage {stage} has no unit {unit}")))?;
        let expected = u.reduce.conv.in_channels;
        if x.rank() != 4 || x.shape()[1] != expected {
            return Err(ArchError::InvalidInput(format!(
                "stage {stage} unit {unit} expects {expected} input channels, got shape {:?}",
                x.shape()
            )));
        }
        self.unit_forward(x, u, mode)
    }

    /// Residual stage `stage` (0-based) applied to `x`.
    pub fn bottleneck_stage(&self, x: &Tensor<T>, stage: usize, mode: Mode) -> Result<Tensor<T>, ArchError> {
        let units = self.stage_units(stage)?;
        let mut y = x.clone();
        for i in 0..units.len() {
            y = self.bottleneck_unit(&y, stage, i, mode)?;
        }
        Ok(y)
    }

    /// Pools to each pyramid scale, reduces channels, upsamples back and
    /// concatenates with the input map.
    pub fn pyramid_pool(&self, x: &Tensor<T>, mode: Mode) -> Result<Tensor<T>, ArchError> {
        let (h, w) = (x.shape()[2], x.shape()[3]);
        let mut parts = vec![x.clone()];
        for (&scale, level) in self.plan.pyramid.scales.iter().zip(&self.plan.pyramid.levels) {
            let pooled = ops::adaptive_avg_pool2d(x, (scale, scale))?;
            let reduced = self.conv_bn(&pooled, level, mode)?;
            parts.push(ops::bilinear_upsample(&reduced, (h, w))?);
        }
        Ok(ops::concat_channels(&parts)?)
    }

    /// Shared trunk up to the pooled feature vector `n × d`.
    pub fn features<R: Rng + ?Sized>(
        &self,
        batch: &Tensor<T>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Tensor<T>, ArchError> {
        self.check_input(batch)?;
        let mut x = self.stem(batch, mode)?;
        for stage in 0..self.plan.stages.len() {
            x = self.bottleneck_stage(&x, stage, mode)?;
        }
        let x = self.pyramid_pool(&x, mode)?;
        let x = self.conv_bn(&x, &self.plan.conv_psp[0], mode)?;
        let x = self.conv_bn(&x, &self.plan.conv_psp[1], mode)?;
        let x = ops::dropout(&x, self.plan.config.dropout_p, mode, rng)?;
        let x = ops::adaptive_avg_pool2d(&x, (1, 1))?;
        let n = x.shape()[0];
        let c = x.shape()[1];
        Ok(ops::reshape(&x, &[n, c])?)
    }

    fn head(&self, x: &Tensor<T>, layers: &[Dense]) -> Result<Tensor<T>, ArchError> {
        let mut y = x.clone();
        for (i, layer) in layers.iter().enumerate() {
            y = self.dense(&y, layer)?;
            if i + 1 < layers.len() {
                y = ops::relu(&y)?;
            }
        }
        Ok(y)
    }

    /// Full forward pass for an `n×3×S×S` batch with values in `[0, 1]`.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        batch: &Tensor<T>,
        mode: Mode,
        rng: &mut R,
    ) -> Result<HeadLogits<T>, ArchError> {
        let features = self.features(batch, mode, rng)?;
        Ok(HeadLogits {
            cuisine: self.head(&features, &self.plan.cuisine_head)?,
            flavor: self.head(&features, &self.plan.flavor_head)?,
        })
    }

    /// Names of the parameters that belong to one classification head.
    pub fn head_parameter_names(&self, task: HeadKind) -> Vec<&str> {
        let prefix = match task {
            HeadKind::Cuisine => "head_cuisine.",
            HeadKind::Flavor => "head_flavor.",
        };
        self.plan
            .params
            .iter()
            .filter(|p| p.name.starts_with(prefix))
            .map(|p| p.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    Cuisine,
    Flavor,
}
