//! Grayscale image container and the sampling/filter primitives used by the
//! corpus renderer, the perturbation stack, and training-time augmentation.
//!
//! Pixels are `f32` in `[0, 1]`, row-major, `0.0` = black. The canvas used
//! throughout the pipeline is [`CANVAS_H`] x [`CANVAS_W`].

use crate::error::{Error, Result};
use std::path::Path;

/// Canvas height in pixels.
pub const CANVAS_H: usize = 32;
/// Canvas width in pixels.
pub const CANVAS_W: usize = 64;

/// A grayscale intensity grid with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub h: usize,
    pub w: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(h: usize, w: usize, fill: f32) -> Self {
        Image {
            h,
            w,
            data: vec![fill; h * w],
        }
    }

    /// Standard pipeline canvas filled with `fill`.
    pub fn canvas(fill: f32) -> Self {
        Image::new(CANVAS_H, CANVAS_W, fill)
    }

    pub fn from_vec(h: usize, w: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != h * w {
            return Err(Error::invalid(format!(
                "image buffer length {} does not match {}x{}",
                data.len(),
                h,
                w
            )));
        }
        Ok(Image { h, w, data })
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.data[y * self.w + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f32) {
        self.data[y * self.w + x] = v;
    }

    pub fn pixels(&self) -> &[f32] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn clamp01(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn mean(&self) -> f32 {
        let s: f64 = self.data.iter().map(|&v| v as f64).sum();
        (s / self.data.len() as f64) as f32
    }

    /// Mean absolute pixel difference to another image of the same shape.
    pub fn mean_abs_diff(&self, other: &Image) -> f32 {
        assert_eq!((self.h, self.w), (other.h, other.w), "shape mismatch");
        let s: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .sum();
        (s / self.data.len() as f64) as f32
    }

    /// Fraction of pixels whose absolute difference exceeds `thresh`.
    pub fn frac_pixels_differing(&self, other: &Image, thresh: f32) -> f32 {
        assert_eq!((self.h, self.w), (other.h, other.w), "shape mismatch");
        let n = self
            .data
            .iter()
            .zip(&other.data)
            .filter(|(&a, &b)| (a - b).abs() > thresh)
            .count();
        n as f32 / self.data.len() as f32
    }

    /// Bilinear sample at fractional coordinates; out-of-bounds reads return `outside`.
    pub fn sample_bilinear(&self, y: f32, x: f32, outside: f32) -> f32 {
        if !(0.0..=(self.h - 1) as f32).contains(&y) || !(0.0..=(self.w - 1) as f32).contains(&x) {
            return outside;
        }
        let y0 = y.floor() as usize;
        let x0 = x.floor() as usize;
        let y1 = (y0 + 1).min(self.h - 1);
        let x1 = (x0 + 1).min(self.w - 1);
        let fy = y - y0 as f32;
        let fx = x - x0 as f32;
        let top = self.get(y0, x0) * (1.0 - fx) + self.get(y0, x1) * fx;
        let bot = self.get(y1, x0) * (1.0 - fx) + self.get(y1, x1) * fx;
        top * (1.0 - fy) + bot * fy
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let mut buf = image::GrayImage::new(self.w as u32, self.h as u32);
        for y in 0..self.h {
            for x in 0..self.w {
                let v = (self.get(y, x).clamp(0.0, 1.0) * 255.0).round() as u8;
                buf.put_pixel(x as u32, y as u32, image::Luma([v]));
            }
        }
        buf.save(path).map_err(Error::from)
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)?.into_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = img.pixels().map(|p| p.0[0] as f32 / 255.0).collect();
        Image::from_vec(h, w, data)
    }
}

/// A 3x3 projective transform mapping output pixel coordinates to input
/// coordinates (inverse mapping, so warps never leave holes).
#[derive(Debug, Clone, Copy)]
pub struct Homography(pub [f32; 9]);

impl Homography {
    pub fn identity() -> Self {
        Homography([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
    }

    pub fn mul(&self, o: &Homography) -> Homography {
        let a = &self.0;
        let b = &o.0;
        let mut c = [0.0f32; 9];
        for i in 0..3 {
            for j in 0..3 {
                c[i * 3 + j] = a[i * 3] * b[j] + a[i * 3 + 1] * b[3 + j] + a[i * 3 + 2] * b[6 + j];
            }
        }
        Homography(c)
    }

    pub fn translation(dy: f32, dx: f32) -> Homography {
        Homography([1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0])
    }

    pub fn rotation(theta: f32) -> Homography {
        let (s, c) = theta.sin_cos();
        Homography([c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
    }

    pub fn scale(sy: f32, sx: f32) -> Homography {
        Homography([sx, 0.0, 0.0, 0.0, sy, 0.0, 0.0, 0.0, 1.0])
    }

    pub fn shear_x(k: f32) -> Homography {
        Homography([1.0, k, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0])
    }

    /// Perspective terms: the bottom row becomes `[py, px, 1]`.
    pub fn perspective(py: f32, px: f32) -> Homography {
        Homography([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, px, py, 1.0])
    }

    /// Apply to (x, y), returning (x', y').
    #[inline]
    pub fn apply(&self, x: f32, y: f32) -> (f32, f32) {
        let m = &self.0;
        let xp = m[0] * x + m[1] * y + m[2];
        let yp = m[3] * x + m[4] * y + m[5];
        let wp = m[6] * x + m[7] * y + m[8];
        (xp / wp, yp / wp)
    }
}

/// Warp `src` by the inverse-mapping homography `h_inv` (output -> input),
/// sampling bilinearly. Pixels mapping outside `src` take value `outside`.
pub fn warp(src: &Image, h_inv: &Homography, outside: f32) -> Image {
    let mut out = Image::new(src.h, src.w, outside);
    for y in 0..src.h {
        for x in 0..src.w {
            let (sx, sy) = h_inv.apply(x as f32, y as f32);
            out.set(y, x, src.sample_bilinear(sy, sx, outside));
        }
    }
    out
}

/// Build an inverse-mapping homography that rotates/shears/scales about the
/// image center with an optional perspective term.
pub fn center_warp(
    h: usize,
    w: usize,
    theta: f32,
    shear: f32,
    scale: f32,
    persp_y: f32,
    persp_x: f32,
) -> Homography {
    let cy = (h as f32 - 1.0) / 2.0;
    let cx = (w as f32 - 1.0) / 2.0;
    // Inverse mapping: apply the inverse of each forward op in reverse order.
    let t1 = Homography::translation(-cy, -cx);
    let rot = Homography::rotation(-theta);
    let sh = Homography::shear_x(-shear);
    let sc = Homography::scale(1.0 / scale, 1.0 / scale);
    let pp = Homography::perspective(-persp_y, -persp_x);
    let t2 = Homography::translation(cy, cx);
    t2.mul(&pp).mul(&sc).mul(&sh).mul(&rot).mul(&t1)
}

/// Separable Gaussian blur. `sigma <= 0` returns a copy.
pub fn gaussian_blur(src: &Image, sigma: f32) -> Image {
    if sigma <= 0.0 {
        return src.clone();
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    let denom = 2.0 * (sigma as f64) * (sigma as f64);
    for i in -radius..=radius {
        kernel.push((-((i * i) as f64) / denom).exp());
    }
    let ksum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= ksum;
    }
    // Horizontal pass, clamped borders.
    let mut tmp = Image::new(src.h, src.w, 0.0);
    for y in 0..src.h {
        for x in 0..src.w {
            let mut acc = 0.0f64;
            for (ki, kv) in kernel.iter().enumerate() {
                let xi = (x as i64 + ki as i64 - radius).clamp(0, src.w as i64 - 1) as usize;
                acc += kv * src.get(y, xi) as f64;
            }
            tmp.set(y, x, acc as f32);
        }
    }
    let mut out = Image::new(src.h, src.w, 0.0);
    for y in 0..src.h {
        for x in 0..src.w {
            let mut acc = 0.0f64;
            for (ki, kv) in kernel.iter().enumerate() {
                let yi = (y as i64 + ki as i64 - radius).clamp(0, src.h as i64 - 1) as usize;
                acc += kv * tmp.get(yi, x) as f64;
            }
            out.set(y, x, acc as f32);
        }
    }
    out
}

/// Bilinear resize to `(nh, nw)`.
pub fn resize(src: &Image, nh: usize, nw: usize) -> Image {
    let mut out = Image::new(nh, nw, 0.0);
    let sy = src.h as f32 / nh as f32;
    let sx = src.w as f32 / nw as f32;
    for y in 0..nh {
        for x in 0..nw {
            // Sample at the source-space center of the output pixel.
            let fy = ((y as f32 + 0.5) * sy - 0.5).clamp(0.0, (src.h - 1) as f32);
            let fx = ((x as f32 + 0.5) * sx - 0.5).clamp(0.0, (src.w - 1) as f32);
            out.set(y, x, src.sample_bilinear(fy, fx, 0.0));
        }
    }
    out
}

/// Round-trip through a lower resolution (factor > 1 shrinks then restores).
pub fn lowres_roundtrip(src: &Image, factor: f32) -> Image {
    if factor <= 1.0 {
        return src.clone();
    }
    let nh = ((src.h as f32 / factor).round() as usize).max(2);
    let nw = ((src.w as f32 / factor).round() as usize).max(2);
    let small = resize(src, nh, nw);
    resize(&small, src.h, src.w)
}
