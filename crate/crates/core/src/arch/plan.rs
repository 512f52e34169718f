//! Layer layout derived from a [`ModelConfig`]: every parameter's name, shape
//! and initializer, plus the wiring the forward pass follows. Building a plan
//! allocates no tensors, so shape checks and traces work for full-size
//! configurations.

use std::fmt;

use super::{ArchError, ModelConfig};
use crate::tensor::ops::ConvParams;

/// Channel widths of the reference (multiplier 1) network.
mod reference {
    pub const STEM_1: usize = 32;
    pub const STEM_2: usize = 64;
    pub const STAGE_MID: [usize; 4] = [64, 128, 256, 512];
    pub const STAGE_OUT: [usize; 4] = [256, 512, 1024, 2048];
    pub const CONV_PSP: [usize; 2] = [2048, 1024];
    pub const CUISINE_HIDDEN: [usize; 1] = [256];
    pub const FLAVOR_HIDDEN: [usize; 2] = [512, 128];
}

/// Stride as printed in the layer table; a printed 0 means unit stride.
fn table_stride(s: usize) -> usize {
    s.max(1)
}

/// Stem convolutions as `(K, S, P)` table entries.
const CONV1_KSP: (usize, usize, usize) = (5, 0, 2);
const CONV2_KSP: (usize, usize, usize) = (7, 0, 3);
const CONV3_KSP: (usize, usize, usize) = (1, 2, 0);
const CONV4_KSP: (usize, usize, usize) = (3, 0, 1);
const CONV5_KSP: (usize, usize, usize) = (5, 0, 2);
const CONV6_KSP: (usize, usize, usize) = (1, 1, 0);

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Normal with std `sqrt(2 / fan_in)`.
    KaimingNormal {
        fan_in: usize,
    },
    /// Uniform in `±1/sqrt(fan_in)`.
    FanInUniform {
        fan_in: usize,
    },
    Ones,
    Zeros,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnSpec {
    pub name: String,
    pub channels: usize,
}

/// Conv (no bias) → batch norm, optionally followed by ReLU.
#[derive(Debug, Clone)]
pub(crate) struct ConvBn {
    pub conv: ConvParams,
    pub weight: usize,
    pub gamma: usize,
    pub beta: usize,
    pub stats: usize,
    pub relu: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Bottleneck {
    pub reduce: ConvBn,
    pub spatial: ConvBn,
    pub expand: ConvBn,
    pub projection: Option<ConvBn>,
}

#[derive(Debug, Clone)]
pub(crate) struct Dense {
    pub weight: usize,
    pub bias: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Stem {
    pub conv1: ConvBn,
    pub conv2: ConvBn,
    pub agg1: usize,
    pub conv3: ConvBn,
    pub conv4: ConvBn,
    pub conv5: ConvBn,
    pub agg2: usize,
    pub conv6: ConvBn,
}

#[derive(Debug, Clone)]
pub(crate) struct Pyramid {
    pub scales: Vec<usize>,
    pub levels: Vec<ConvBn>,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub config: ModelConfig,
    pub params: Vec<ParamSpec>,
    pub batch_norms: Vec<BnSpec>,
    pub(crate) stem: Stem,
    pub(crate) stages: Vec<Vec<Bottleneck>>,
    pub(crate) pyramid: Pyramid,
    pub(crate) conv_psp: [ConvBn; 2],
    pub(crate) cuisine_head: Vec<Dense>,
    pub(crate) flavor_head: Vec<Dense>,
}

struct Builder {
    params: Vec<ParamSpec>,
    batch_norms: Vec<BnSpec>,
}

impl Builder {
    fn param(&mut self, name: String, shape: Vec<usize>, init: Init) -> usize {
        self.params.push(ParamSpec { name, shape, init });
        self.params.len() - 1
    }

    fn conv_bn(&mut self, name: &str, cin: usize, cout: usize, (k, s, p): (usize, usize, usize), relu: bool) -> ConvBn {
        let conv = ConvParams::new(cin, cout, k, table_stride(s), p);
        let weight = self.param(
            format!("{name}.weight"),
            conv.weight_shape().to_vec(),
            Init::KaimingNormal { fan_in: cin * k * k },
        );
        let gamma = self.param(format!("{name}.bn.gamma"), vec![cout], Init::Ones);
        let beta = self.param(format!("{name}.bn.beta"), vec![cout], Init::Zeros);
        self.batch_norms.push(BnSpec {
            name: format!("{name}.bn"),
            channels: cout,
        });
        ConvBn {
            conv,
            weight,
            gamma,
            beta,
            stats: self.batch_norms.len() - 1,
            relu,
        }
    }

    fn dense(&mut self, name: &str, din: usize, dout: usize) -> Dense {
        let init = Init::FanInUniform { fan_in: din };
        Dense {
            weight: self.param(format!("{name}.weight"), vec![dout, din], init),
            bias: self.param(format!("{name}.bias"), vec![dout], init),
        }
    }

    fn head(&mut self, name: &str, din: usize, hidden: &[usize], classes: usize) -> Vec<Dense> {
        // hidden layers, then the num_class projection, then the final
        // num_class -> num_class linear
        let mut widths = vec![din];
        widths.extend_from_slice(hidden);
        widths.push(classes);
        widths.push(classes);
        widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| self.dense(&format!("{name}.fc{}", i + 1), w[0], w[1]))
            .collect()
    }
}

impl Plan {
    pub fn new(config: &ModelConfig) -> Result<Self, ArchError> {
        config.validate()?;
        let s = |c: usize| config.width.scale(c);
        let mut b = Builder {
            params: Vec::new(),
            batch_norms: Vec::new(),
        };
        let (c1, c2) = (s(reference::STEM_1), s(reference::STEM_2));
        let conv1 = b.conv_bn("stem.conv1", 3, c1, CONV1_KSP, true);
        let conv2 = b.conv_bn("stem.conv2", 3, c1, CONV2_KSP, true);
        let agg1 = b.param("stem.agg1.logits".into(), vec![2], Init::Zeros);
        let conv3 = b.conv_bn("stem.conv3", c1, c1, CONV3_KSP, true);
        let conv4 = b.conv_bn("stem.conv4", c1, c2, CONV4_KSP, true);
        let conv5 = b.conv_bn("stem.conv5", c1, c2, CONV5_KSP, true);
        let agg2 = b.param("stem.agg2.logits".into(), vec![2], Init::Zeros);
        let conv6 = b.conv_bn("stem.conv6", c2, c2, CONV6_KSP, true);
        let stem = Stem {
            conv1,
            conv2,
            agg1,
            conv3,
            conv4,
            conv5,
            agg2,
            conv6,
        };

        let mut stages = Vec::with_capacity(4);
        let mut cin = c2;
        for (si, &count) in config.bottleneck_counts.iter().enumerate() {
            let mid = s(reference::STAGE_MID[si]);
            let out = s(reference::STAGE_OUT[si]);
            let stage_stride = if si == 0 { 1 } else { 2 };
            let mut units = Vec::with_capacity(count);
            for ui in 0..count {
                let name = format!("layer{}.{ui}", si + 1);
                let stride = if ui == 0 { stage_stride } else { 1 };
                let unit_in = if ui == 0 { cin } else { out };
                let reduce = b.conv_bn(&format!("{name}.reduce"), unit_in, mid, (1, 1, 0), true);
                let spatial = b.conv_bn(&format!("{name}.spatial"), mid, mid, (3, stride, 1), true);
                let expand = b.conv_bn(&format!("{name}.expand"), mid, out, (1, 1, 0), false);
                let projection = (ui == 0 && (unit_in != out || stride != 1))
                    .then(|| b.conv_bn(&format!("{name}.projection"), unit_in, out, (1, stride, 0), false));
                units.push(Bottleneck {
                    reduce,
                    spatial,
                    expand,
                    projection,
                });
            }
            stages.push(units);
            cin = out;
        }

        let backbone = cin;
        let per_level = backbone.div_ceil(config.pool_scales.len());
        let levels = config
            .pool_scales
            .iter()
            .enumerate()
            .map(|(i, _)| b.conv_bn(&format!("psp.level{i}"), backbone, per_level, (1, 1, 0), true))
            .collect();
        let pyramid = Pyramid {
            scales: config.pool_scales.clone(),
            levels,
        };
        let psp_out = backbone + per_level * config.pool_scales.len();
        let (m1, m2) = (s(reference::CONV_PSP[0]), s(reference::CONV_PSP[1]));
        let conv_psp = [
            b.conv_bn("conv_psp.conv1", psp_out, m1, (3, 0, 1), true),
            b.conv_bn("conv_psp.conv2", m1, m2, (3, 0, 1), true),
        ];
        let cuisine_hidden: Vec<usize> = reference::CUISINE_HIDDEN.iter().map(|&c| s(c)).collect();
        let flavor_hidden: Vec<usize> = reference::FLAVOR_HIDDEN.iter().map(|&c| s(c)).collect();
        let cuisine_head = b.head("head_cuisine", m2, &cuisine_hidden, config.num_cuisines);
        let flavor_head = b.head("head_flavor", m2, &flavor_hidden, config.num_flavors);

        Ok(Self {
            config: config.clone(),
            params: b.params,
            batch_norms: b.batch_norms,
            stem,
            stages,
            pyramid,
            conv_psp,
            cuisine_head,
            flavor_head,
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.shape.iter().product::<usize>()).sum()
    }

    /// Per-layer output shapes with a symbolic batch dimension, one row per
    /// line of the architecture table preceded by the input.
    pub fn shape_trace(&self) -> Vec<TraceRow> {
        let cfg = &self.config;
        let size = cfg.input_size;
        let mut rows = Vec::new();
        let mut push = |name: &str, dims: Vec<usize>| {
            rows.push(TraceRow {
                name: name.to_string(),
                dims,
            })
        };
        push("Input", vec![3, size, size]);
        let st = &self.stem;
        let side = |c: &ConvBn, h: usize| c.conv.output_len(h).expect("validated config");
        let h1 = side(&st.conv1, size);
        push("Conv1", vec![st.conv1.conv.out_channels, h1, h1]);
        let h2 = side(&st.conv2, size);
        push("Conv2", vec![st.conv2.conv.out_channels, h2, h2]);
        push("W1", vec![st.conv1.conv.out_channels, h1, h1]);
        let h3 = side(&st.conv3, h1);
        push("Conv3", vec![st.conv3.conv.out_channels, h3, h3]);
        let h4 = side(&st.conv4, h3);
        push("Conv4", vec![st.conv4.conv.out_channels, h4, h4]);
        let h5 = side(&st.conv5, h3);
        push("Conv5", vec![st.conv5.conv.out_channels, h5, h5]);
        push("W2", vec![st.conv4.conv.out_channels, h4, h4]);
        let h6 = side(&st.conv6, h4);
        push("Conv6", vec![st.conv6.conv.out_channels, h6, h6]);
        let mut h = h6;
        let mut c = st.conv6.conv.out_channels;
        for (si, units) in self.stages.iter().enumerate() {
            for unit in units {
                h = side(&unit.spatial, h);
                c = unit.expand.conv.out_channels;
            }
            push(&format!("Layer{}", si + 1), vec![c, h, h]);
        }
        let psp_c = c + self.pyramid.levels.iter().map(|l| l.conv.out_channels).sum::<usize>();
        push("PSP", vec![psp_c, h, h]);
        push("ConvPSP", vec![self.conv_psp[1].conv.out_channels, 1, 1]);
        let head_rows = |rows: &mut Vec<TraceRow>, head: &[Dense], prefix: &str, last: &str| {
            for (i, dense) in head.iter().enumerate() {
                let out = self.params[dense.bias].shape[0];
                if i + 1 == head.len() {
                    rows.push(TraceRow {
                        name: last.to_string(),
                        dims: vec![out],
                    });
                } else {
                    rows.push(TraceRow {
                        name: format!("{prefix}/FC{}", i + 1),
                        dims: vec![out, 1, 1],
                    });
                }
            }
        };
        head_rows(&mut rows, &self.cuisine_head, "FC(Cuisine)", "FC_C");
        head_rows(&mut rows, &self.flavor_head, "FC(Flavor)", "FC_F");
        rows
    }
}

/// One layer's output shape; the leading batch dimension is implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub name: String,
    pub dims: Vec<usize>,
}

impl fmt::Display for TraceRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: n", self.name)?;
        for d in &self.dims {
            write!(f, "×{d}")?;
        }
        Ok(())
    }
}

/// Shape trace of `config`, one row per layer.
pub fn shape_trace(config: &ModelConfig) -> Result<Vec<TraceRow>, ArchError> {
    Ok(Plan::new(config)?.shape_trace())
}

/// The trace rendered one row per line.
pub fn render_trace(rows: &[TraceRow]) -> String {
    rows.iter().map(|r| format!("{r}\n")).collect()
}
