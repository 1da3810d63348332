//! Severity-parameterized perturbation stack standing in for the source/target
//! domain shift: projective warp, low-resolution round-trip, blur, contrast
//! and brightness drift, occluding rectangles, and sensor noise.
//!
//! All random draws happen up front and do not depend on severity, so for a
//! fixed seed the output is a continuous path away from the clean image and
//! every component's magnitude scales with severity.

use crate::error::{Error, Result};
use crate::image::{self, Image};
use crate::nn::rng::derive_rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const MAX_RECTS: usize = 3;

struct PerturbDraws {
    u_theta: f32,
    u_shear: f32,
    u_scale: f32,
    u_persp_y: f32,
    u_persp_x: f32,
    u_lowres: f32,
    u_blur: f32,
    u_contrast: f32,
    u_bright: f32,
    rects: [(f32, f32, f32, f32, f32); MAX_RECTS], // (cy, cx, u_hh, u_hw, fill)
    u_nrect: f32,
    noise: Vec<f32>,
    u_noise_amp: f32,
}

fn draw_params(seed: u64, h: usize, w: usize) -> PerturbDraws {
    let mut rng = derive_rng(seed, "perturb");
    let sym = |r: &mut rand_chacha::ChaCha8Rng| r.gen::<f32>() * 2.0 - 1.0;
    let u_theta = sym(&mut rng);
    let u_shear = sym(&mut rng);
    let u_scale = sym(&mut rng);
    let u_persp_y = sym(&mut rng);
    let u_persp_x = sym(&mut rng);
    let u_lowres = 0.3 + 0.7 * rng.gen::<f32>();
    let u_blur = 0.35 + 0.65 * rng.gen::<f32>();
    let u_contrast = 0.3 + 0.7 * rng.gen::<f32>();
    let u_bright = sym(&mut rng);
    let mut rects = [(0.0, 0.0, 0.0, 0.0, 0.0); MAX_RECTS];
    for r in &mut rects {
        let cy = 4.0 + (h as f32 - 8.0) * rng.gen::<f32>();
        let cx = 4.0 + (w as f32 - 8.0) * rng.gen::<f32>();
        let u_hh = 0.4 + 0.6 * rng.gen::<f32>();
        let u_hw = 0.4 + 0.6 * rng.gen::<f32>();
        let fill = if rng.gen::<f32>() < 0.5 {
            0.05 + 0.2 * rng.gen::<f32>()
        } else {
            0.75 + 0.2 * rng.gen::<f32>()
        };
        *r = (cy, cx, u_hh, u_hw, fill);
    }
    let u_nrect = rng.gen::<f32>();
    let noise: Vec<f32> = (0..h * w)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let u_noise_amp = 0.4 + 0.6 * rng.gen::<f32>();
    PerturbDraws {
        u_theta,
        u_shear,
        u_scale,
        u_persp_y,
        u_persp_x,
        u_lowres,
        u_blur,
        u_contrast,
        u_bright,
        rects,
        u_nrect,
        noise,
        u_noise_amp,
    }
}

/// Perturb `img` with strength `severity` in `[0, 1]`. Severity 0 returns
/// the input unchanged; determinism follows from the seed.
pub fn perturb(img: &Image, severity: f32, seed: u64) -> Result<Image> {
    if !(0.0..=1.0).contains(&severity) || !severity.is_finite() {
        return Err(Error::invalid(format!(
            "severity {severity} outside [0, 1]"
        )));
    }
    if severity == 0.0 {
        return Ok(img.clone());
    }
    let s = severity;
    let p = draw_params(seed, img.h, img.w);

    // Geometry: rotation, shear, scale and perspective, all about the center.
    let border_fill = {
        let mut acc = 0.0f32;
        let mut n = 0;
        for x in 0..img.w {
            acc += img.get(0, x) + img.get(img.h - 1, x);
            n += 2;
        }
        acc / n as f32
    };
    let hmat = image::center_warp(
        img.h,
        img.w,
        s * 0.20 * p.u_theta,
        s * 0.22 * p.u_shear,
        1.0 + s * 0.10 * p.u_scale,
        s * 0.0045 * p.u_persp_y,
        s * 0.0045 * p.u_persp_x,
    );
    let mut out = image::warp(img, &hmat, border_fill);

    // Low-resolution round trip.
    out = image::lowres_roundtrip(&out, 1.0 + 2.2 * s * p.u_lowres);

    // Defocus blur.
    out = image::gaussian_blur(&out, 1.5 * s * p.u_blur);

    // Contrast compression toward mid-gray plus brightness drift.
    let c = 1.0 - 0.45 * s * p.u_contrast;
    let db = 0.10 * s * p.u_bright;
    for v in out.pixels_mut() {
        *v = 0.5 + (*v - 0.5) * c + db;
    }

    // Occluding rectangles: fixed centers, area grows with severity.
    let n_rects = (1.0 + (MAX_RECTS as f32 - 1.0) * s * p.u_nrect).floor() as usize;
    for &(cy, cx, u_hh, u_hw, fill) in p.rects.iter().take(n_rects.min(MAX_RECTS)) {
        let hh = s * 4.5 * u_hh;
        let hw = s * 8.0 * u_hw;
        let y0 = (cy - hh).max(0.0) as usize;
        let y1 = ((cy + hh) as usize).min(out.h - 1);
        let x0 = (cx - hw).max(0.0) as usize;
        let x1 = ((cx + hw) as usize).min(out.w - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                out.set(y, x, fill);
            }
        }
    }

    // Sensor noise, linear in severity.
    let amp = 0.16 * s * p.u_noise_amp;
    for (v, n) in out.pixels_mut().iter_mut().zip(&p.noise) {
        *v += amp * n;
    }
    out.clamp01();
    Ok(out)
}
