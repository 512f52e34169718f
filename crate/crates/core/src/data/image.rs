//! RGB images as planar `f32` in `[0, 1]`, binary PPM (P6) I/O and
//! corner-aligned bilinear resizing.

use std::path::Path;

use super::DataError;
use crate::tensor::ops::corner_aligned_taps;
use crate::tensor::{Element, Tensor};

/// Planar RGB image: `data[c·h·w + y·w + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

/// Exact at both ends and for equal endpoints.
#[inline]
pub(crate) fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + (b - a) * t
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), 3 * height * width, "image buffer size");
        Self { height, width, data }
    }

    pub fn filled(height: usize, width: usize, rgb: [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(3 * height * width);
        for v in rgb {
            data.extend(std::iter::repeat_n(v, height * width));
        }
        Self { height, width, data }
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f32) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    /// Mean of each channel.
    pub fn channel_means(&self) -> [f64; 3] {
        let n = (self.height * self.width) as f64;
        [0, 1, 2].map(|c| self.plane(c).iter().map(|&v| v as f64).sum::<f64>() / n)
    }

    /// Corner-aligned bilinear resize of the window `[y0, y0+h) × [x0, x0+w)`
    /// to `out_h × out_w`.
    pub fn resize_region(&self, (y0, x0): (usize, usize), (h, w): (usize, usize), out_h: usize, out_w: usize) -> Image {
        assert!(y0 + h <= self.height && x0 + w <= self.width && h > 0 && w > 0);
        let ty = corner_aligned_taps(h, out_h);
        let tx = corner_aligned_taps(w, out_w);
        let mut data = Vec::with_capacity(3 * out_h * out_w);
        for c in 0..3 {
            for &(a, b, fy) in &ty {
                let fy = fy as f32;
                for &(l, r, fx) in &tx {
                    let fx = fx as f32;
                    let p = |y: usize, x: usize| self.get(c, y0 + y, x0 + x);
                    let top = lerp(p(a, l), p(a, r), fx);
                    let bottom = lerp(p(b, l), p(b, r), fx);
                    data.push(lerp(top, bottom, fy));
                }
            }
        }
        Image::new(out_h, out_w, data)
    }

    pub fn resize(&self, out_h: usize, out_w: usize) -> Image {
        if (out_h, out_w) == (self.height, self.width) {
            return self.clone();
        }
        self.resize_region((0, 0), (self.height, self.width), out_h, out_w)
    }

    pub fn to_tensor<T: Element>(&self) -> Tensor<T> {
        let data = self.data.iter().map(|&v| T::of(v as f64)).collect();
        Tensor::new(&[3, self.height, self.width], data).expect("image shape")
    }
}

/// Stacks equally sized images into an `n × 3 × h × w` tensor.
pub fn batch_tensor<T: Element>(images: &[Image]) -> Tensor<T> {
    assert!(!images.is_empty(), "empty batch");
    let (h, w) = (images[0].height, images[0].width);
    let mut data = Vec::with_capacity(images.len() * 3 * h * w);
    for img in images {
        assert_eq!((img.height, img.width), (h, w), "batch images differ in size");
        data.extend(img.data.iter().map(|&v| T::of(v as f64)));
    }
    Tensor::new(&[images.len(), 3, h, w], data).expect("batch shape")
}

fn skip_space_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

fn header_number(bytes: &[u8], pos: &mut usize) -> Result<usize, DataError> {
    skip_space_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(if *pos >= bytes.len() {
            DataError::Truncated("PPM header".into())
        } else {
            DataError::UnsupportedFormat("malformed PPM header".into())
        });
    }
    std::str::from_utf8(&bytes[start..*pos])
        .unwrap()
        .parse()
        .map_err(|_| DataError::UnsupportedFormat("PPM header number overflows".into()))
}

/// Decodes an 8-bit binary PPM.
pub fn decode_ppm(bytes: &[u8]) -> Result<Image, DataError> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(DataError::UnsupportedFormat("not a binary PPM (P6) file".into()));
    }
    let mut pos = 2;
    let width = header_number(bytes, &mut pos)?;
    let height = header_number(bytes, &mut pos)?;
    let maxval = header_number(bytes, &mut pos)?;
    if width == 0 || height == 0 {
        return Err(DataError::UnsupportedFormat("zero image dimension".into()));
    }
    if !(1..=255).contains(&maxval) {
        return Err(DataError::UnsupportedFormat(format!("max value {maxval} is not 8-bit")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(DataError::Truncated("PPM header".into()));
    }
    pos += 1;
    let n = width * height;
    let pixels = bytes
        .get(pos..pos + 3 * n)
        .ok_or_else(|| DataError::Truncated(format!("expected {} pixel bytes, found {}", 3 * n, bytes.len() - pos)))?;
    let mut data = vec![0f32; 3 * n];
    for (i, rgb) in pixels.chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * n + i] = rgb[c].min(maxval as u8) as f32 / maxval as f32;
        }
    }
    Ok(Image::new(height, width, data))
}

/// Encodes to 8-bit binary PPM, rounding to the nearest level.
pub fn encode_ppm(image: &Image) -> Vec<u8> {
    let n = image.height * image.width;
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.reserve(3 * n);
    for i in 0..n {
        for c in 0..3 {
            let v = image.data[c * n + i].clamp(0.0, 1.0);
            out.push((v * 255.0).round() as u8);
        }
    }
    out
}

pub fn read_ppm(path: &Path) -> Result<Image, DataError> {
    let bytes = std::fs::read(path).map_err(|e| DataError::io(path, e))?;
    decode_ppm(&bytes).map_err(|e| e.at_path(path))
}

pub fn write_ppm(path: &Path, image: &Image) -> Result<(), DataError> {
    std::fs::write(path, encode_ppm(image)).map_err(|e| DataError::io(path, e))
}

/// Reads a PPM and resizes it to `size × size`.
pub fn load_image(path: &Path, size: usize) -> Result<Image, DataError> {
    Ok(read_ppm(path)?.resize(size, size))
}
