//! Synthetic stand-in dataset with the same label structure as the real one.
//!
//! Each image encodes its pair jointly: the cuisine picks a hue, the flavor
//! picks a stripe orientation and period plus a brightness level. Per-image
//! jitter in hue, brightness and stripe phase plus pixel noise keep samples
//! distinct.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::image::{write_ppm, Image};
use super::manifest::{DatasetManifest, Sample};
use super::vocab::{CUISINES, FLAVORS};
use super::DataError;
use crate::rng;

pub const DEFAULT_SYNTH_SIZE: usize = 64;
pub const MANIFEST_NAME: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    /// Images per (cuisine, flavor) pair.
    pub per_class: usize,
    pub seed: u64,
    pub size: usize,
}

impl SynthOptions {
    pub fn new(per_class: usize, seed: u64) -> Self {
        Self {
            per_class,
            seed,
            size: DEFAULT_SYNTH_SIZE,
        }
    }
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let i = h6.floor();
    let f = h6 - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    match i as u32 % 6 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

/// Renders one image for `(cuisine, flavor)`.
pub fn render_sample<R: Rng + ?Sized>(cuisine: usize, flavor: usize, size: usize, rng: &mut R) -> Image {
    let hue = cuisine as f64 / CUISINES.len() as f64 + rng.random_range(-0.01..0.01);
    let value = 0.35 + 0.12 * flavor as f64 + rng.random_range(-0.02..0.02);
    let base = hsv_to_rgb(hue, 0.9, value);
    // vertical, horizontal or diagonal, at two periods
    let period = if flavor < 3 { 4.0 } else { 8.0 };
    let phase = rng.random_range(0.0..period);
    let noise = Normal::new(0.0, 0.03).unwrap();
    let n = size * size;
    let mut data = vec![0f32; 3 * n];
    for y in 0..size {
        for x in 0..size {
            let t = match flavor % 3 {
                0 => x,
                1 => y,
                _ => x + y,
            } as f64;
            let stripe = if (t + phase).rem_euclid(period) < period / 2.0 {
                1.0
            } else {
                0.45
            };
            for c in 0..3 {
                let v = base[c] * stripe + noise.sample(rng);
                data[c * n + y * size + x] = v.clamp(0.0, 1.0) as f32;
            }
        }
    }
    Image::new(size, size, data)
}

/// Scores whose arg-max is `flavor`: the intended flavor in `[0.6, 1]`, the
/// rest in `[0, 0.5]`.
fn synth_scores<R: Rng + ?Sized>(flavor: usize, rng: &mut R) -> Vec<(usize, f64)> {
    (0..FLAVORS.len())
        .map(|f| {
            let s: f64 = if f == flavor {
                rng.random_range(0.6..=1.0)
            } else {
                rng.random_range(0.0..=0.5)
            };
            (f, (s * 100.0).round() / 100.0)
        })
        .collect()
}

/// Writes `per_class` images for every (cuisine, flavor) pair under
/// `out_dir/images` plus `out_dir/manifest.tsv`, and returns the manifest
/// (without split assignments).
pub fn synth_dataset_with(opts: &SynthOptions, out_dir: &Path) -> Result<DatasetManifest, DataError> {
    if opts.per_class == 0 || opts.size < 2 {
        return Err(DataError::Parse {
            line: 0,
            message: "synthetic dataset needs per_class >= 1 and size >= 2".into(),
        });
    }
    let images = out_dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| DataError::io(&images, e))?;
    let mut manifest = DatasetManifest {
        provenance: Some(format!(
            "synthetic seed={} per_class={} size={}",
            opts.seed, opts.per_class, opts.size
        )),
        root: out_dir.to_path_buf(),
        samples: Vec::new(),
    };
    let mut index = 0u64;
    for (cuisine, cuisine_name) in CUISINES.iter().enumerate() {
        for (flavor, flavor_name) in FLAVORS.iter().enumerate() {
            for k in 0..opts.per_class {
                let mut rng = rng::substream(opts.seed, rng::SYNTH, index);
                index += 1;
                let image = render_sample(cuisine, flavor, opts.size, &mut rng);
                let rel = format!(
                    "images/{}_{}_{k:03}.ppm",
                    cuisine_name.to_lowercase(),
                    flavor_name.to_lowercase()
                );
                write_ppm(&out_dir.join(&rel), &image)?;
                let sample = Sample::new(rel, cuisine, synth_scores(flavor, &mut rng))?;
                debug_assert_eq!(sample.flavor, flavor);
                manifest.samples.push(sample);
            }
        }
    }
    manifest.write(&out_dir.join(MANIFEST_NAME))?;
    Ok(manifest)
}

/// [`synth_dataset_with`] at the default image size.
pub fn synth_dataset(per_class: usize, seed: u64, out_dir: &Path) -> Result<DatasetManifest, DataError> {
    synth_dataset_with(&SynthOptions::new(per_class, seed), out_dir)
}
