//! Training-time augmentation: random crop resized back to full size, random
//! horizontal flip, then a small rotation about the image center.

use rand::Rng;

use super::image::{lerp, Image};

pub const CROP_SCALE: (f64, f64) = (0.8, 1.0);
pub const MAX_ANGLE_DEG: f64 = 10.0;
pub const FLIP_P: f64 = 0.5;

/// One fully specified augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentDraw {
    /// Crop side as a fraction of the height and of the width.
    pub crop_scale: (f64, f64),
    /// Crop position as a fraction of the available slack, in `[0, 1]`.
    pub crop_offset: (f64, f64),
    pub flip: bool,
    /// Counter-clockwise on screen.
    pub angle_deg: f64,
}

impl AugmentDraw {
    pub const IDENTITY: AugmentDraw = AugmentDraw {
        crop_scale: (1.0, 1.0),
        crop_offset: (0.0, 0.0),
        flip: false,
        angle_deg: 0.0,
    };

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let crop_scale = (
            rng.random_range(CROP_SCALE.0..=CROP_SCALE.1),
            rng.random_range(CROP_SCALE.0..=CROP_SCALE.1),
        );
        let crop_offset = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
        let flip = rng.random_bool(FLIP_P);
        let angle_deg = rng.random_range(-MAX_ANGLE_DEG..=MAX_ANGLE_DEG);
        Self {
            crop_scale,
            crop_offset,
            flip,
            angle_deg,
        }
    }

    pub fn apply(&self, image: &Image) -> Image {
        let cropped = crop_resize(image, self.crop_scale, self.crop_offset);
        let flipped = if self.flip { hflip(&cropped) } else { cropped };
        if self.angle_deg == 0.0 {
            flipped
        } else {
            rotate(&flipped, self.angle_deg)
        }
    }
}

/// Draws and applies one augmentation.
pub fn augment<R: Rng + ?Sized>(image: &Image, rng: &mut R) -> Image {
    AugmentDraw::sample(rng).apply(image)
}

fn crop_resize(image: &Image, scale: (f64, f64), offset: (f64, f64)) -> Image {
    let (h, w) = (image.height, image.width);
    let side = |len: usize, s: f64| ((len as f64 * s).round() as usize).clamp(1, len);
    let (ch, cw) = (side(h, scale.0), side(w, scale.1));
    if (ch, cw) == (h, w) {
        return image.clone();
    }
    let start = |slack: usize, f: f64| ((slack as f64 * f.clamp(0.0, 1.0)).round() as usize).min(slack);
    let origin = (start(h - ch, offset.0), start(w - cw, offset.1));
    image.resize_region(origin, (ch, cw), h, w)
}

pub fn hflip(image: &Image) -> Image {
    let mut out = image.clone();
    for row in out.data.chunks_mut(image.width) {
        row.reverse();
    }
    out
}

/// Bilinear sample at `(y, x)`; taps outside the image read as zero.
fn sample_zero_fill(image: &Image, c: usize, y: f64, x: f64) -> f32 {
    let (y0, x0) = (y.floor(), x.floor());
    let (fy, fx) = ((y - y0) as f32, (x - x0) as f32);
    let tap = |yy: f64, xx: f64| {
        if yy < 0.0 || xx < 0.0 || yy >= image.height as f64 || xx >= image.width as f64 {
            0.0
        } else {
            image.get(c, yy as usize, xx as usize)
        }
    };
    let top = lerp(tap(y0, x0), tap(y0, x0 + 1.0), fx);
    let bottom = lerp(tap(y0 + 1.0, x0), tap(y0 + 1.0, x0 + 1.0), fx);
    lerp(top, bottom, fy)
}

/// Rotation about the pixel-grid center by inverse mapping: each output
/// pixel reads the source location rotated back by `angle_deg`.
pub fn rotate(image: &Image, angle_deg: f64) -> Image {
    let (h, w) = (image.height, image.width);
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let mut out = Image::new(h, w, vec![0.0; 3 * h * w]);
    for y in 0..h {
        let dy = y as f64 - cy;
        for x in 0..w {
            let dx = x as f64 - cx;
            // y grows downward, so a counter-clockwise turn on screen maps
            // source (dx, dy) to (dx·cos + dy·sin, −dx·sin + dy·cos).
            let sx = cx + dx * cos - dy * sin;
            let sy = cy + dx * sin + dy * cos;
            for c in 0..3 {
                out.set(c, y, x, sample_zero_fill(image, c, sy, sx));
            }
        }
    }
    out
}
