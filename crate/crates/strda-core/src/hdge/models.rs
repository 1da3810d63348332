//! Generator and discriminator networks for the translation pairs.
//!
//! The generator is a small encoder-decoder with an identity skip: its
//! convolutional output is added to the logit of the input image before the
//! final sigmoid, so a freshly initialized generator is already close to the
//! identity map. That gives the discriminators realistic translated samples
//! from step one and keeps cycle reconstruction easy.

use crate::nn::rng::derive_rng;
use crate::nn::{
    leaky_relu_bwd, leaky_relu_fwd, Conv2d, Conv2dCache, Linear, Model, ParamVisitor, Upsample2x,
};
use ndarray::{Array2, Array4};

const ALPHA: f32 = 0.2;
const SKIP_EPS: f32 = 1e-4;

#[derive(Debug, Clone)]
pub struct Generator {
    pub enc1: Conv2d,
    pub enc2: Conv2d,
    pub dec1: Conv2d,
    pub dec2: Conv2d,
}

pub struct GenCache {
    x: Array4<f32>,
    c_e1: Conv2dCache,
    e1a: Array4<f32>,
    c_e2: Conv2dCache,
    e2a: Array4<f32>,
    c_d1: Conv2dCache,
    d1a: Array4<f32>,
    c_d2: Conv2dCache,
    y: Array4<f32>,
}

impl Generator {
    pub fn init(rng: &mut rand_chacha::ChaCha8Rng) -> Self {
        Generator {
            enc1: Conv2d::new(1, 16, 3, 2, 1, 1.0, rng),
            enc2: Conv2d::new(16, 32, 3, 2, 1, 1.0, rng),
            dec1: Conv2d::new(32, 16, 3, 1, 1, 1.0, rng),
            dec2: Conv2d::new(16, 1, 3, 1, 1, 0.01, rng),
        }
    }

    /// Translate a batch of images in `[0,1]`; output stays in `(0,1)`.
    pub fn forward(&self, x: &Array4<f32>) -> (Array4<f32>, GenCache) {
        let up = Upsample2x;
        let (e1a, c_e1) = self.enc1.forward(x);
        let e1 = leaky_relu_fwd(&e1a, ALPHA);
        let (e2a, c_e2) = self.enc2.forward(&e1);
        let e2 = leaky_relu_fwd(&e2a, ALPHA);
        let u1 = up.forward(&e2);
        let (d1a, c_d1) = self.dec1.forward(&u1);
        let d1 = leaky_relu_fwd(&d1a, ALPHA);
        let u2 = up.forward(&d1);
        let (d2a, c_d2) = self.dec2.forward(&u2);
        // Identity skip in logit space.
        let mut y = d2a.clone();
        ndarray::Zip::from(&mut y).and(x).for_each(|v, &xv| {
            let xc = xv.clamp(SKIP_EPS, 1.0 - SKIP_EPS);
            let pre = *v + (xc / (1.0 - xc)).ln();
            *v = 1.0 / (1.0 + (-pre).exp());
        });
        let cache = GenCache {
            x: x.clone(),
            c_e1,
            e1a,
            c_e2,
            e2a,
            c_d1,
            d1a,
            c_d2,
            y: y.clone(),
        };
        (y, cache)
    }

    /// Backward from grad wrt output; accumulates parameter grads and returns
    /// grad wrt the input image (needed for cycle chains).
    pub fn backward(&mut self, cache: &GenCache, dy: &Array4<f32>) -> Array4<f32> {
        let up = Upsample2x;
        // Through the sigmoid.
        let mut dpre = dy.clone();
        ndarray::Zip::from(&mut dpre)
            .and(&cache.y)
            .for_each(|d, &yv| *d *= yv * (1.0 - yv));
        // Skip path: d(logit(xc))/dx = 1 / (xc (1 - xc)), zero where clamped.
        let mut dskip = dpre.clone();
        ndarray::Zip::from(&mut dskip)
            .and(&cache.x)
            .for_each(|d, &xv| {
                if xv <= SKIP_EPS || xv >= 1.0 - SKIP_EPS {
                    *d = 0.0;
                } else {
                    *d /= xv * (1.0 - xv);
                }
            });
        // Conv path.
        let du2 = self.dec2.backward(&cache.c_d2, &dpre);
        let dd1 = up.backward(&du2);
        let dd1a = leaky_relu_bwd(&cache.d1a, &dd1, ALPHA);
        let du1 = self.dec1.backward(&cache.c_d1, &dd1a);
        let de2 = up.backward(&du1);
        let de2a = leaky_relu_bwd(&cache.e2a, &de2, ALPHA);
        let de1 = self.enc2.backward(&cache.c_e2, &de2a);
        let de1a = leaky_relu_bwd(&cache.e1a, &de1, ALPHA);
        let dx_conv = self.enc1.backward(&cache.c_e1, &de1a);
        dx_conv + dskip
    }
}

impl Model for Generator {
    fn visit_params(&mut self, v: &mut dyn ParamVisitor) {
        self.enc1.visit_params("enc1", v);
        self.enc2.visit_params("enc2", v);
        self.dec1.visit_params("dec1", v);
        self.dec2.visit_params("dec2", v);
    }
}

/// Four-layer convolutional classifier emitting one raw logit per image;
/// `sigmoid(logit)` is the probability the image is real for this domain.
#[derive(Debug, Clone)]
pub struct Discriminator {
    pub c1: Conv2d,
    pub c2: Conv2d,
    pub c3: Conv2d,
    pub fc: Linear,
}

pub struct DiscCache {
    c_c1: Conv2dCache,
    a1: Array4<f32>,
    c_c2: Conv2dCache,
    a2: Array4<f32>,
    c_c3: Conv2dCache,
    a3: Array4<f32>,
    flat: Array2<f32>,
    p3_dim: (usize, usize, usize, usize),
}

const D_FLAT: usize = 64 * 4 * 8;

impl Discriminator {
    pub fn init(rng: &mut rand_chacha::ChaCha8Rng) -> Self {
        Discriminator {
            c1: Conv2d::new(1, 16, 3, 2, 1, 1.0, rng),
            c2: Conv2d::new(16, 32, 3, 2, 1, 1.0, rng),
            c3: Conv2d::new(32, 64, 3, 2, 1, 1.0, rng),
            fc: Linear::new(D_FLAT, 1, 0.05, rng),
        }
    }

    pub fn forward(&self, x: &Array4<f32>) -> (Vec<f32>, DiscCache) {
        let (a1, c_c1) = self.c1.forward(x);
        let r1 = leaky_relu_fwd(&a1, ALPHA);
        let (a2, c_c2) = self.c2.forward(&r1);
        let r2 = leaky_relu_fwd(&a2, ALPHA);
        let (a3, c_c3) = self.c3.forward(&r2);
        let r3 = leaky_relu_fwd(&a3, ALPHA);
        let (bs, c, h, w) = r3.dim();
        let mut flat = Array2::zeros((bs, c * h * w));
        for b in 0..bs {
            let mut k = 0;
            for ch in 0..c {
                for y in 0..h {
                    for xx in 0..w {
                        flat[[b, k]] = r3[[b, ch, y, xx]];
                        k += 1;
                    }
                }
            }
        }
        let out = self.fc.forward(&flat);
        let logits: Vec<f32> = (0..bs).map(|b| out[[b, 0]]).collect();
        (
            logits,
            DiscCache {
                c_c1,
                a1,
                c_c2,
                a2,
                c_c3,
                a3,
                flat,
                p3_dim: (bs, c, h, w),
            },
        )
    }

    /// Backward from grads wrt the logits; returns grad wrt the input image.
    pub fn backward(&mut self, cache: &DiscCache, dlogits: &[f32]) -> Array4<f32> {
        let (bs, c, h, w) = cache.p3_dim;
        let mut dy = Array2::zeros((bs, 1));
        for (b, &g) in dlogits.iter().enumerate() {
            dy[[b, 0]] = g;
        }
        let dflat = self.fc.backward(&cache.flat, &dy);
        // r3 gradient: un-flatten, then back through lrelu using a3.
        let mut dr3 = Array4::zeros((bs, c, h, w));
        for b in 0..bs {
            let mut k = 0;
            for ch in 0..c {
                for y in 0..h {
                    for xx in 0..w {
                        dr3[[b, ch, y, xx]] = dflat[[b, k]];
                        k += 1;
                    }
                }
            }
        }
        let da3 = leaky_relu_bwd(&cache.a3, &dr3, ALPHA);
        let dr2 = self.c3.backward(&cache.c_c3, &da3);
        let da2 = leaky_relu_bwd(&cache.a2, &dr2, ALPHA);
        let dr1 = self.c2.backward(&cache.c_c2, &da2);
        let da1 = leaky_relu_bwd(&cache.a1, &dr1, ALPHA);
        self.c1.backward(&cache.c_c1, &da1)
    }
}

impl Model for Discriminator {
    fn visit_params(&mut self, v: &mut dyn ParamVisitor) {
        self.c1.visit_params("c1", v);
        self.c2.visit_params("c2", v);
        self.c3.visit_params("c3", v);
        self.fc.visit_params("fc", v);
    }
}

/// Both mapping directions and their discriminators.
#[derive(Debug, Clone)]
pub struct TranslationPair {
    /// Source -> target generator.
    pub g_t: Generator,
    /// Target -> source generator.
    pub g_s: Generator,
    /// Discriminator for the target domain.
    pub d_t: Discriminator,
    /// Discriminator for the source domain.
    pub d_s: Discriminator,
    pub step: u64,
}

impl TranslationPair {
    pub fn init(seed: u64) -> Self {
        let mut rng = derive_rng(seed, "hdge-init");
        TranslationPair {
            g_t: Generator::init(&mut rng),
            g_s: Generator::init(&mut rng),
            d_t: Discriminator::init(&mut rng),
            d_s: Discriminator::init(&mut rng),
            step: 0,
        }
    }
}

impl Model for TranslationPair {
    fn visit_params(&mut self, v: &mut dyn ParamVisitor) {
        struct Prefixed<'a> {
            inner: &'a mut dyn ParamVisitor,
            prefix: &'static str,
        }
        impl ParamVisitor for Prefixed<'_> {
            fn visit(
                &mut self,
                name: &str,
                kind: crate::nn::ParamKind,
                p: &mut [f32],
                g: &mut [f32],
            ) {
                self.inner.visit(&format!("{}.{}", self.prefix, name), kind, p, g);
            }
        }
        self.g_t.visit_params(&mut Prefixed { inner: v, prefix: "g_t" });
        self.g_s.visit_params(&mut Prefixed { inner: v, prefix: "g_s" });
        self.d_t.visit_params(&mut Prefixed { inner: v, prefix: "d_t" });
        self.d_s.visit_params(&mut Prefixed { inner: v, prefix: "d_s" });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::render_word;
    use crate::recognizer::Recognizer;

    #[test]
    fn generator_starts_near_identity() {
        let mut rng = derive_rng(41, "gen-test");
        let g = Generator::init(&mut rng);
        let img = render_word("test", 0, 1).unwrap();
        let x = Recognizer::batch_array(&[&img]).unwrap();
        let (y, _) = g.forward(&x);
        let mad: f32 =
            y.iter().zip(x.iter()).map(|(a, b)| (a - b).abs()).sum::<f32>() / x.len() as f32;
        assert!(mad < 0.05, "fresh generator far from identity: {mad}");
    }

    #[test]
    fn generator_backward_matches_fd_on_input() {
        let mut rng = derive_rng(42, "gen-fd");
        let mut g = Generator::init(&mut rng);
        let x = Array4::from_shape_fn((1, 1, 8, 8), |(_, _, y, xx)| {
            0.3 + 0.05 * ((y * 8 + xx) % 7) as f32
        });
        let (y, cache) = g.forward(&x);
        let dy = Array4::from_elem(y.dim(), 1.0);
        g.zero_grads();
        let dx = g.backward(&cache, &dy);
        let h = 1e-3f32;
        for &(yy, xx) in &[(1usize, 1usize), (4, 6), (7, 0)] {
            let mut xp = x.clone();
            xp[[0, 0, yy, xx]] += h;
            let (yp, _) = g.forward(&xp);
            xp[[0, 0, yy, xx]] -= 2.0 * h;
            let (ym, _) = g.forward(&xp);
            let fd = (yp.sum() - ym.sum()) / (2.0 * h);
            let an = dx[[0, 0, yy, xx]];
            assert!(
                (fd - an).abs() < 2e-2 * (1.0 + an.abs()),
                "gen dx mismatch at ({yy},{xx}): fd={fd} an={an}"
            );
        }
    }

    #[test]
    fn discriminator_shapes_and_backward() {
        let mut rng = derive_rng(43, "disc-test");
        let mut d = Discriminator::init(&mut rng);
        let imgs: Vec<crate::image::Image> = (0..3)
            .map(|i| render_word("abc", 0, i).unwrap())
            .collect();
        let refs: Vec<&crate::image::Image> = imgs.iter().collect();
        let x = Recognizer::batch_array(&refs).unwrap();
        let (logits, cache) = d.forward(&x);
        assert_eq!(logits.len(), 3);
        d.zero_grads();
        let dx = d.backward(&cache, &[1.0, 0.5, -0.5]);
        assert_eq!(dx.dim(), x.dim());
        assert!(dx.iter().any(|&v| v != 0.0));
    }

    #[test]
    fn pair_checkpoint_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut pair = TranslationPair::init(7);
        let path = dir.path().join("pair.ckpt");
        crate::nn::save_checkpoint(&path, &mut pair, "hdge", 5, "cfg123").unwrap();
        let mut other = TranslationPair::init(8);
        let meta = crate::nn::load_checkpoint(&path, &mut other, "hdge").unwrap();
        assert_eq!(meta.step, 5);
        let a = pair.snapshot();
        let b = other.snapshot();
        for ((n1, d1), (n2, d2)) in a.iter().zip(&b) {
            assert_eq!(n1, n2);
            assert_eq!(d1, d2, "tensor {n1} differs after round trip");
        }
        // Kind mismatch must fail.
        assert!(crate::nn::load_checkpoint(&path, &mut other, "recognizer").is_err());
    }
}
