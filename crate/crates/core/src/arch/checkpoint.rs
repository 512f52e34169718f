//! Binary checkpoint format (all integers little-endian):
//!
//! ```text
//! "CNET" | version u32 | element bytes u8 (4 or 8)
//! config length u32 | config text (`key = value` lines)
//! record count u32 | records
//! optimizer flag u8 | [step u64 | record count u32 | records]
//!
//! record: name length u32 | name | rank u32 | dims u64 × rank | values
//! ```
//!
//! Parameters are stored under their plan names, batch-norm state as
//! `<bn>.running_mean` / `<bn>.running_var`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::plan::Plan;
use super::{ArchError, Model, ModelConfig};
use crate::tensor::ops::RunningStats;
use crate::tensor::Element;

pub const MAGIC: &[u8; 4] = b"CNET";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic bytes)")]
    NotACheckpoint,
    #[error("unsupported checkpoint version {0} (expected {VERSION})")]
    Version(u32),
    #[error("checkpoint truncated while reading {0}")]
    Truncated(&'static str),
    #[error("checkpoint stores {found}-byte elements, expected {expected}")]
    Precision { expected: usize, found: usize },
    #[error("parameter {name}: checkpoint shape {found:?} conflicts with configured shape {expected:?}")]
    ShapeConflict {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("checkpoint is missing {0}")]
    Missing(String),
    #[error("checkpoint has unexpected record {0}")]
    Unexpected(String),
    #[error("invalid embedded config: {0}")]
    Config(#[from] ArchError),
    #[error("malformed checkpoint: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Named array as stored in a record.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray<T> {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<T>,
}

/// Optimizer state carried alongside the model.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSnapshot<T> {
    pub step: u64,
    pub arrays: Vec<NamedArray<T>>,
}

fn write_records<T: Element>(out: &mut Vec<u8>, records: &[NamedArray<T>]) {
    out.extend_from_slice(&(records.len() as u32).to_le_bytes());
    for r in records {
        out.extend_from_slice(&(r.name.len() as u32).to_le_bytes());
        out.extend_from_slice(r.name.as_bytes());
        out.extend_from_slice(&(r.dims.len() as u32).to_le_bytes());
        for &d in &r.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in &r.values {
            v.write_le(out);
        }
    }
}

fn model_records<T: Element>(model: &Model<T>) -> Vec<NamedArray<T>> {
    let mut records: Vec<NamedArray<T>> = model
        .named_parameters()
        .map(|(name, t)| NamedArray {
            name: name.to_string(),
            dims: t.shape().to_vec(),
            values: t.to_vec(),
        })
        .collect();
    for (name, stats) in model.running_stats() {
        let c = stats.mean.len();
        records.push(NamedArray {
            name: format!("{name}.running_mean"),
            dims: vec![c],
            values: stats.mean,
        });
        records.push(NamedArray {
            name: format!("{name}.running_var"),
            dims: vec![c],
            values: stats.var,
        });
    }
    records
}

/// Serializes the model (and optionally optimizer state) to bytes.
pub fn encode<T: Element>(model: &Model<T>, optimizer: Option<&OptimizerSnapshot<T>>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(T::BYTES as u8);
    let config = model.config().to_text();
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(config.as_bytes());
    write_records(&mut out, &model_records(model));
    match optimizer {
        Some(opt) => {
            out.push(1);
            out.extend_from_slice(&opt.step.to_le_bytes());
            write_records(&mut out, &opt.arrays);
        }
        None => out.push(0),
    }
    out
}

pub fn save_checkpoint<T: Element>(
    model: &Model<T>,
    optimizer: Option<&OptimizerSnapshot<T>>,
    path: impl AsRef<Path>,
) -> Result<(), CheckpointError> {
    fs::write(path, encode(model, optimizer))?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated(what))?;
        if end > self.bytes.len() {
            return Err(CheckpointError::Truncated(what));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, CheckpointError> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &'static str) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn records<T: Element>(&mut self) -> Result<Vec<NamedArray<T>>, CheckpointError> {
        let count = self.u32("record count")? as usize;
        let mut out = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = self.u32("record name length")? as usize;
            let name = std::str::from_utf8(self.take(len, "record name")?)
                .map_err(|_| CheckpointError::Malformed("record name is not UTF-8".into()))?
                .to_string();
            let rank = self.u32("record rank")? as usize;
            let dims = (0..rank)
                .map(|_| self.u64("record dims").map(|d| d as usize))
                .collect::<Result<Vec<_>, _>>()?;
            let numel = dims
                .iter()
                .try_fold(1usize, |acc, &d| acc.checked_mul(d))
                .ok_or_else(|| CheckpointError::Malformed(format!("{name}: dims overflow")))?;
            let raw = self.take(
                numel
                    .checked_mul(T::BYTES)
                    .ok_or(CheckpointError::Truncated("record values"))?,
                "record values",
            )?;
            let values = raw.chunks_exact(T::BYTES).map(T::read_le).collect();
            out.push(NamedArray { name, dims, values });
        }
        Ok(out)
    }
}

/// Parsed checkpoint contents before they are applied to a model.
pub struct Decoded<T> {
    pub config: ModelConfig,
    pub records: Vec<NamedArray<T>>,
    pub optimizer: Option<OptimizerSnapshot<T>>,
}

pub fn decode<T: Element>(bytes: &[u8]) -> Result<Decoded<T>, CheckpointError> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(CheckpointError::NotACheckpoint);
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let elem = r.u8("element size")? as usize;
    if elem != T::BYTES {
        return Err(CheckpointError::Precision {
            expected: T::BYTES,
            found: elem,
        });
    }
    let config_len = r.u32("config length")? as usize;
    let config_text = std::str::from_utf8(r.take(config_len, "config")?)
        .map_err(|_| CheckpointError::Malformed("config is not UTF-8".into()))?;
    let config = ModelConfig::from_text(config_text)?;
    let records = r.records()?;
    let optimizer = match r.u8("optimizer flag")? {
        0 => None,
        1 => {
            let step = r.u64("optimizer step")?;
            Some(OptimizerSnapshot {
                step,
                arrays: r.records()?,
            })
        }
        f => return Err(CheckpointError::Malformed(format!("optimizer flag {f}"))),
    };
    if r.pos != bytes.len() {
        return Err(CheckpointError::Malformed(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Ok(Decoded {
        config,
        records,
        optimizer,
    })
}

/// Checks every record against the plan of `config` (in plan order) without
/// allocating a model.
fn check_shapes<T>(plan: &Plan, records: &HashMap<&str, &NamedArray<T>>) -> Result<(), CheckpointError> {
    let expected =
        plan.params
            .iter()
            .map(|p| (p.name.clone(), p.shape.clone()))
            .chain(plan.batch_norms.iter().flat_map(|bn| {
                [
                    (format!("{}.running_mean", bn.name), vec![bn.channels]),
                    (format!("{}.running_var", bn.name), vec![bn.channels]),
                ]
            }));
    let mut seen = 0;
    for (name, shape) in expected {
        let rec = records
            .get(name.as_str())
            .ok_or_else(|| CheckpointError::Missing(name.clone()))?;
        if rec.dims != shape {
            return Err(CheckpointError::ShapeConflict {
                name,
                expected: shape,
                found: rec.dims.clone(),
            });
        }
        seen += 1;
    }
    if seen != records.len() {
        let known: std::collections::HashSet<&str> = plan.params.iter().map(|p| p.name.as_str()).collect();
        let extra = records
            .keys()
            .find(|k| !known.contains(*k) && !k.ends_with(".running_mean") && !k.ends_with(".running_var"))
            .map(|k| k.to_string())
            .unwrap_or_default();
        return Err(CheckpointError::Unexpected(extra));
    }
    Ok(())
}

fn build<T: Element>(config: &ModelConfig, records: Vec<NamedArray<T>>) -> Result<Model<T>, CheckpointError> {
    let plan = Plan::new(config)?;
    let by_name: HashMap<&str, &NamedArray<T>> = records.iter().map(|r| (r.name.as_str(), r)).collect();
    check_shapes(&plan, &by_name)?;
    let model = Model::<T>::new(config, 0)?;
    for (name, t) in model.named_parameters() {
        t.data_mut().copy_from_slice(&by_name[name].values);
    }
    for (i, bn) in plan.batch_norms.iter().enumerate() {
        model.set_running_stats(
            i,
            RunningStats {
                mean: by_name[format!("{}.running_mean", bn.name).as_str()].values.clone(),
                var: by_name[format!("{}.running_var", bn.name).as_str()].values.clone(),
            },
        );
    }
    Ok(model)
}

/// Restores a model from its embedded configuration.
pub fn load_checkpoint<T: Element>(
    path: impl AsRef<Path>,
) -> Result<(Model<T>, Option<OptimizerSnapshot<T>>), CheckpointError> {
    let decoded = decode::<T>(&fs::read(path)?)?;
    let model = build(&decoded.config, decoded.records)?;
    Ok((model, decoded.optimizer))
}

/// Restores a model for an explicitly given configuration; shape conflicts
/// name the first mismatched parameter.
pub fn load_checkpoint_with_config<T: Element>(
    path: impl AsRef<Path>,
    config: &ModelConfig,
) -> Result<(Model<T>, Option<OptimizerSnapshot<T>>), CheckpointError> {
    let decoded = decode::<T>(&fs::read(path)?)?;
    let model = build(config, decoded.records)?;
    Ok((model, decoded.optimizer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::WidthMultiplier;

    fn small() -> ModelConfig {
        ModelConfig {
            width: WidthMultiplier::new(1, 16).unwrap(),
            input_size: 32,
            pool_scales: vec![1, 2],
            bottleneck_counts: [1, 1, 1, 1],
            ..Default::default()
        }
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode(&Model::<f32>::new(&small(), 0).unwrap(), None);
        bytes[0] = b'X';
        assert!(matches!(decode::<f32>(&bytes), Err(CheckpointError::NotACheckpoint)));
    }

    #[test]
    fn truncated_and_version_errors() {
        let bytes = encode(&Model::<f32>::new(&small(), 0).unwrap(), None);
        assert!(matches!(
            decode::<f32>(&bytes[..bytes.len() - 3]),
            Err(CheckpointError::Truncated(_))
        ));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(decode::<f32>(&v2), Err(CheckpointError::Version(2))));
        assert!(matches!(decode::<f64>(&bytes), Err(CheckpointError::Precision { .. })));
    }

    #[test]
    fn optimizer_snapshot_round_trip() {
        let model = Model::<f32>::new(&small(), 1).unwrap();
        let snap = OptimizerSnapshot {
            step: 42,
            arrays: vec![NamedArray {
                name: "m/x".into(),
                dims: vec![2],
                values: vec![0.5f32, -1.0],
            }],
        };
        let decoded = decode::<f32>(&encode(&model, Some(&snap))).unwrap();
        assert_eq!(decoded.optimizer, Some(snap));
        assert_eq!(decoded.config, small());
    }
}
