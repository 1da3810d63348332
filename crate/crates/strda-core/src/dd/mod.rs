//! Domain discriminator: a binary source/target classifier whose feature
//! extractor comes from the baseline recognizer and whose sigmoid output on
//! a target image is the gap score directly (lower = closer to source).
//! Trained with focal loss to cope with the 2:1 source/target imbalance
//! without class-weight tuning.

mod focal;
mod train;

pub use focal::{focal_loss, focal_loss_with_grad, focal_term_source, focal_term_target};
pub use train::train_dd;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::nn::rng::derive_rng;
use crate::nn::{Linear, Model, ParamVisitor};
use crate::par;
use crate::recognizer::trunk::{Trunk, TrunkCache, G_FEATS};
use crate::recognizer::Recognizer;
use crate::stratifier::ScoredSample;
use ndarray::{Array2, Array4};

/// Clamp keeping scores strictly inside (0, 1).
pub const SCORE_EPS: f64 = 1e-6;

/// Classifier parameters: shared trunk plus a scalar head.
#[derive(Debug, Clone)]
pub struct DdParams {
    pub trunk: Trunk,
    pub head: Linear,
    pub step: u64,
}

/// Focal-loss training settings.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FocalConfig {
    /// Focusing parameter; 0 recovers plain binary cross-entropy.
    pub gamma: f64,
    pub iters: u64,
    pub batch_size: usize,
    pub max_lr: f32,
    pub weight_decay: f32,
}

impl Default for FocalConfig {
    fn default() -> Self {
        FocalConfig {
            gamma: 2.0,
            iters: 500,
            batch_size: 16,
            max_lr: 5e-4,
            weight_decay: 0.005,
        }
    }
}

impl FocalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gamma < 0.0 || !self.gamma.is_finite() {
            return Err(Error::invalid(format!("gamma {} must be >= 0", self.gamma)));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        Ok(())
    }
}

pub struct DdCache {
    trunk: TrunkCache,
    g: Array2<f32>,
}

impl DdParams {
    /// Initialize the feature extractor from a trained baseline recognizer;
    /// the whole network stays trainable. The scalar head is fresh.
    pub fn from_baseline(baseline: &Recognizer, seed: u64) -> Self {
        let mut rng = derive_rng(seed, "dd-init");
        DdParams {
            trunk: baseline.trunk.clone(),
            head: Linear::new(G_FEATS, 1, 0.05, &mut rng),
            step: 0,
        }
    }

    /// Raw (pre-sigmoid) classifier outputs for a batch.
    pub fn forward(&self, x: &Array4<f32>) -> (Vec<f32>, DdCache) {
        let trunk = self.trunk.forward(x);
        let out = self.head.forward(&trunk.g);
        let logits: Vec<f32> = (0..x.dim().0).map(|b| out[[b, 0]]).collect();
        let g = trunk.g.clone();
        (logits, DdCache { trunk, g })
    }

    /// Backward from grads wrt raw outputs; accumulates parameter grads.
    pub fn backward(&mut self, cache: &DdCache, dlogits: &[f32]) {
        let bs = dlogits.len();
        let mut dy = Array2::zeros((bs, 1));
        for (b, &g) in dlogits.iter().enumerate() {
            dy[[b, 0]] = g;
        }
        let dg = self.head.backward(&cache.g, &dy);
        self.trunk.backward(&cache.trunk, &dg, None);
    }
}

impl Model for DdParams {
    fn visit_params(&mut self, v: &mut dyn ParamVisitor) {
        self.trunk.visit_params("", v);
        self.head.visit_params("head", v);
    }
}

/// Gap score for a batch of images: `sigmoid(f(x))`, clamped into (0, 1).
pub fn dd_score_batch(params: &DdParams, images: &[&Image]) -> Result<Vec<f64>> {
    if images.is_empty() {
        return Err(Error::invalid("empty batch for dd_score"));
    }
    let chunks: Vec<&[&Image]> = images.chunks(64).collect();
    let results = par::map(&chunks, |chunk| -> Result<Vec<f64>> {
        let x = Recognizer::batch_array(chunk)?;
        let (logits, _) = params.forward(&x);
        Ok(logits
            .iter()
            .map(|&l| {
                let s = 1.0 / (1.0 + (-(l as f64)).exp());
                s.clamp(SCORE_EPS, 1.0 - SCORE_EPS)
            })
            .collect())
    });
    let mut out = Vec::with_capacity(images.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Single-image convenience wrapper.
pub fn dd_score(params: &DdParams, image: &Image) -> Result<f64> {
    Ok(dd_score_batch(params, &[image])?[0])
}

/// Score every target sample; the score manifest leaves `d_s`/`d_t` empty
/// for this estimator.
pub fn score_targets(params: &DdParams, targets: &[(String, Image)]) -> Result<Vec<ScoredSample>> {
    let images: Vec<&Image> = targets.iter().map(|(_, img)| img).collect();
    let scores = dd_score_batch(params, &images)?;
    Ok(targets
        .iter()
        .zip(&scores)
        .map(|((id, _), &score)| ScoredSample {
            id: id.clone(),
            score,
            provenance: None,
            estimator: "DD".to_string(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::render_word;

    #[test]
    fn score_is_sigmoid_of_raw_output() {
        let baseline = Recognizer::init(1);
        let mut dd = DdParams::from_baseline(&baseline, 2);
        // Zero the head: raw output 0 => score 0.5.
        dd.head.w.fill(0.0);
        dd.head.b.fill(0.0);
        let img = render_word("cat", 0, 3).unwrap();
        let s = dd_score(&dd, &img).unwrap();
        assert!((s - 0.5).abs() < 1e-9);
        // Saturated outputs clamp strictly inside (0, 1).
        dd.head.b.fill(1e4);
        let s = dd_score(&dd, &img).unwrap();
        assert!(s <= 1.0 - SCORE_EPS && s > 0.99);
        dd.head.b.fill(-1e4);
        let s = dd_score(&dd, &img).unwrap();
        assert!(s >= SCORE_EPS && s < 0.01);
    }

    #[test]
    fn trunk_comes_from_baseline() {
        let mut baseline = Recognizer::init(7);
        let mut dd = DdParams::from_baseline(&baseline, 2);
        let b_snap = baseline.snapshot();
        let d_snap = dd.snapshot();
        // Trunk tensors (conv1, conv2, fc_g) match the baseline exactly.
        for (name, data) in &d_snap {
            if let Some((_, b_data)) = b_snap.iter().find(|(n, _)| n == name) {
                assert_eq!(data, b_data, "trunk tensor {name} differs from baseline");
            }
        }
    }

    #[test]
    fn backward_produces_gradients() {
        let baseline = Recognizer::init(3);
        let mut dd = DdParams::from_baseline(&baseline, 4);
        let imgs: Vec<Image> = (0..3).map(|i| render_word("abc", 0, i).unwrap()).collect();
        let refs: Vec<&Image> = imgs.iter().collect();
        let x = Recognizer::batch_array(&refs).unwrap();
        dd.zero_grads();
        let (logits, cache) = dd.forward(&x);
        assert_eq!(logits.len(), 3);
        dd.backward(&cache, &[0.5, -0.25, 1.0]);
        struct Check(bool);
        impl ParamVisitor for Check {
            fn visit(&mut self, _n: &str, _k: crate::nn::ParamKind, _p: &mut [f32], g: &mut [f32]) {
                if g.iter().any(|&v| v != 0.0) {
                    self.0 = true;
                }
            }
        }
        let mut c = Check(false);
        dd.visit_params(&mut c);
        assert!(c.0, "no gradients accumulated");
    }
}
