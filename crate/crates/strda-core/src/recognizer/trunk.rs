//! Shared convolutional feature extractor: two conv/pool stages plus a
//! global projection. The recognizer stacks per-position heads on top; the
//! domain discriminator reuses the same trunk (initialized from a trained
//! baseline) with a scalar head.

use crate::image::{CANVAS_H, CANVAS_W};
use crate::nn::{
    relu_bwd, relu_fwd, Conv2d, Conv2dCache, Linear, MaxPool2, MaxPool2Cache, ParamVisitor,
};
use ndarray::{Array2, Array4};
use rand_chacha::ChaCha8Rng;

pub const C1: usize = 12;
pub const C2: usize = 24;
pub const G_FEATS: usize = 96;
pub const FEAT_H: usize = CANVAS_H / 4;
pub const FEAT_W: usize = CANVAS_W / 4;
pub const FLAT: usize = C2 * FEAT_H * FEAT_W;

#[derive(Debug, Clone)]
pub struct Trunk {
    pub conv1: Conv2d,
    pub conv2: Conv2d,
    pub fc_g: Linear,
}

pub struct TrunkCache {
    c1: Conv2dCache,
    r1: Array4<f32>,
    pc1: MaxPool2Cache,
    c2: Conv2dCache,
    r2: Array4<f32>,
    pc2: MaxPool2Cache,
    /// Pooled feature map `[B, C2, FEAT_H, FEAT_W]`.
    pub p2: Array4<f32>,
    flat: Array2<f32>,
    /// Global context vector `[B, G_FEATS]` (post-ReLU).
    pub g: Array2<f32>,
}

impl Trunk {
    pub fn init(rng: &mut ChaCha8Rng) -> Self {
        Trunk {
            conv1: Conv2d::new(1, C1, 3, 1, 1, 1.0, rng),
            conv2: Conv2d::new(C1, C2, 3, 1, 1, 1.0, rng),
            fc_g: Linear::new(FLAT, G_FEATS, 1.0, rng),
        }
    }

    pub fn forward(&self, x: &Array4<f32>) -> TrunkCache {
        let pool = MaxPool2;
        let (a1, c1) = self.conv1.forward(x);
        let r1 = relu_fwd(&a1);
        let (p1, pc1) = pool.forward(&r1);
        let (a2, c2) = self.conv2.forward(&p1);
        let r2 = relu_fwd(&a2);
        let (p2, pc2) = pool.forward(&r2);
        let bs = x.dim().0;
        let mut flat = Array2::zeros((bs, FLAT));
        for b in 0..bs {
            let mut k = 0;
            for c in 0..C2 {
                for y in 0..FEAT_H {
                    for xx in 0..FEAT_W {
                        flat[[b, k]] = p2[[b, c, y, xx]];
                        k += 1;
                    }
                }
            }
        }
        let g = relu_fwd(&self.fc_g.forward(&flat));
        TrunkCache {
            c1,
            r1,
            pc1,
            c2,
            r2,
            pc2,
            p2,
            flat,
            g,
        }
    }

    /// Backward from the global-context gradient plus an optional extra
    /// gradient on the pooled feature map (used by the per-position heads).
    pub fn backward(&mut self, cache: &TrunkCache, dg: &Array2<f32>, dp2_extra: Option<&Array4<f32>>) {
        let pool = MaxPool2;
        let bs = dg.dim().0;
        let dg_pre = relu_bwd(&cache.g, dg);
        let dflat = self.fc_g.backward(&cache.flat, &dg_pre);
        let mut dp2: Array4<f32> = match dp2_extra {
            Some(extra) => extra.clone(),
            None => Array4::zeros(cache.p2.dim()),
        };
        for b in 0..bs {
            let mut k = 0;
            for c in 0..C2 {
                for y in 0..FEAT_H {
                    for xx in 0..FEAT_W {
                        dp2[[b, c, y, xx]] += dflat[[b, k]];
                        k += 1;
                    }
                }
            }
        }
        let dr2 = pool.backward(&cache.pc2, &dp2);
        let da2 = relu_bwd(&cache.r2, &dr2);
        let dp1 = self.conv2.backward(&cache.c2, &da2);
        let dr1 = pool.backward(&cache.pc1, &dp1);
        let da1 = relu_bwd(&cache.r1, &dr1);
        let _ = self.conv1.backward(&cache.c1, &da1);
    }

    pub fn visit_params(&mut self, prefix: &str, v: &mut dyn ParamVisitor) {
        self.conv1.visit_params(&format!("{prefix}conv1"), v);
        self.conv2.visit_params(&format!("{prefix}conv2"), v);
        self.fc_g.visit_params(&format!("{prefix}fc_g"), v);
    }
}
