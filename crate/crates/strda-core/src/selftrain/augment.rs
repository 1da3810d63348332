//! Training-time augmentation: a small pool of geometry and color ops, a
//! fixed number applied per image at random magnitudes.

use crate::image::{self, Image};
use crate::nn::rng::derive_rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Magnitude ranges for the op pool plus the ops-per-image count.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentPolicy {
    pub ops_per_image: usize,
    /// Radians.
    pub max_rotate: f32,
    pub max_shear: f32,
    pub max_perspective: f32,
    pub max_scale_jitter: f32,
    pub max_brightness: f32,
    pub max_contrast: f32,
    pub max_noise: f32,
    pub max_blur_sigma: f32,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        AugmentPolicy {
            ops_per_image: 2,
            max_rotate: 0.13,
            max_shear: 0.18,
            max_perspective: 0.003,
            max_scale_jitter: 0.08,
            max_brightness: 0.08,
            max_contrast: 0.30,
            max_noise: 0.06,
            max_blur_sigma: 0.9,
        }
    }
}

const OP_COUNT: usize = 8;

/// Apply `policy.ops_per_image` randomly chosen ops at randomly drawn
/// magnitudes. Deterministic given the seed; output clamped to `[0, 1]`.
pub fn augment(img: &Image, policy: &AugmentPolicy, seed: u64) -> Image {
    if policy.ops_per_image == 0 {
        return img.clone();
    }
    let mut rng = derive_rng(seed, "augment");
    let mut out = img.clone();
    for _ in 0..policy.ops_per_image {
        let op = rng.gen_range(0..OP_COUNT);
        let u: f32 = rng.gen::<f32>() * 2.0 - 1.0;
        match op {
            0 => {
                let h = image::center_warp(out.h, out.w, policy.max_rotate * u, 0.0, 1.0, 0.0, 0.0);
                out = image::warp(&out, &h, border_mean(&out));
            }
            1 => {
                let h = image::center_warp(out.h, out.w, 0.0, policy.max_shear * u, 1.0, 0.0, 0.0);
                out = image::warp(&out, &h, border_mean(&out));
            }
            2 => {
                let v: f32 = rng.gen::<f32>() * 2.0 - 1.0;
                let h = image::center_warp(
                    out.h,
                    out.w,
                    0.0,
                    0.0,
                    1.0,
                    policy.max_perspective * u,
                    policy.max_perspective * v,
                );
                out = image::warp(&out, &h, border_mean(&out));
            }
            3 => {
                let s = 1.0 + policy.max_scale_jitter * u;
                let h = image::center_warp(out.h, out.w, 0.0, 0.0, s, 0.0, 0.0);
                out = image::warp(&out, &h, border_mean(&out));
            }
            4 => {
                let db = policy.max_brightness * u;
                for v in out.pixels_mut() {
                    *v += db;
                }
            }
            5 => {
                let c = 1.0 + policy.max_contrast * u;
                for v in out.pixels_mut() {
                    *v = 0.5 + (*v - 0.5) * c;
                }
            }
            6 => {
                let amp = policy.max_noise * rng.gen::<f32>();
                for v in out.pixels_mut() {
                    let n: f32 = StandardNormal.sample(&mut rng);
                    *v += amp * n;
                }
            }
            _ => {
                let sigma = policy.max_blur_sigma * rng.gen::<f32>();
                out = image::gaussian_blur(&out, sigma);
            }
        }
    }
    out.clamp01();
    out
}

fn border_mean(img: &Image) -> f32 {
    let mut acc = 0.0f32;
    let mut n = 0;
    for x in 0..img.w {
        acc += img.get(0, x) + img.get(img.h - 1, x);
        n += 2;
    }
    acc / n as f32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::render_word;

    #[test]
    fn zero_ops_is_identity() {
        let img = render_word("cat", 0, 1).unwrap();
        let policy = AugmentPolicy {
            ops_per_image: 0,
            ..AugmentPolicy::default()
        };
        assert_eq!(augment(&img, &policy, 42), img);
    }

    #[test]
    fn augment_is_deterministic() {
        let img = render_word("dog", 1, 2).unwrap();
        let policy = AugmentPolicy::default();
        let a = augment(&img, &policy, 7);
        let b = augment(&img, &policy, 7);
        assert_eq!(a, b);
        let c = augment(&img, &policy, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn mean_shift_bounded_by_brightness_budget() {
        let policy = AugmentPolicy::default();
        let words = ["red", "dog", "sun", "box"];
        let mut total_shift = 0.0f64;
        let n = 1000;
        for i in 0..n {
            let img = render_word(words[i % words.len()], i % 2, i as u64).unwrap();
            let aug = augment(&img, &policy, 1000 + i as u64);
            total_shift += (aug.mean() - img.mean()) as f64;
        }
        let avg = (total_shift / n as f64).abs();
        assert!(
            avg <= policy.max_brightness as f64,
            "average mean shift {avg} exceeds brightness budget"
        );
    }
}
