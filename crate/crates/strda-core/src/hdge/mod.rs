//! Harmonic domain gap estimation: two unpaired translation directions
//! (source->target and target->source) trained adversarially, whose
//! discriminators then provide per-sample out-of-distribution levels `d_S`
//! and `d_T`. The combined gap score biases toward small `d_S` via a
//! beta-weighted harmonic formula.

mod loss;
mod models;
mod train;

pub use loss::{
    cycle_l1, disc_loss_from_logits, disc_loss_from_outputs, disc_loss_least_squares,
    gen_loss_from_logits, gen_loss_from_outputs, gen_loss_least_squares,
};
pub use models::{Discriminator, Generator, TranslationPair};
pub use train::{adversarial_losses, train_hdge, AdvLossParts, GanLossPoint};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::par;
use crate::stratifier::ScoredSample;

/// Clamp applied to OOD levels so the harmonic denominator and downstream
/// sorting stay well-defined.
pub const OOD_EPS: f64 = 1e-6;

/// Per-sample out-of-distribution levels wrt each domain, strictly inside
/// `(0, 1)` after clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OodScores {
    pub d_s: f64,
    pub d_t: f64,
}

/// Estimator settings.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HdgeConfig {
    /// Bias of the harmonic score toward `d_S`; must satisfy `0 <= beta < 1`.
    pub beta: f64,
    /// Cycle-consistency weight; 0 disables the reconstruction term.
    pub lambda_cyc: f32,
    /// `log` (the printed cross-entropy objective) or `least_squares`.
    pub adv_loss: AdvLossForm,
    pub iters: u64,
    pub batch_size: usize,
    pub lr: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvLossForm {
    Log,
    LeastSquares,
}

impl Default for HdgeConfig {
    fn default() -> Self {
        HdgeConfig {
            beta: 0.5,
            lambda_cyc: 10.0,
            adv_loss: AdvLossForm::Log,
            iters: 1200,
            batch_size: 8,
            lr: 2e-4,
        }
    }
}

impl HdgeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::invalid(format!(
                "beta {} outside [0, 1)",
                self.beta
            )));
        }
        if self.lambda_cyc < 0.0 {
            return Err(Error::invalid("lambda_cyc must be >= 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        Ok(())
    }
}

/// The beta-weighted harmonic combination of the two OOD levels:
/// `(1 + b^2) * d_s * d_t / (b^2 * d_s + d_t)`.
///
/// For `beta = 0` this reduces to `d_s`; for `d_s = d_t` it returns that
/// value; it always lies between `min(d_s, d_t)` and `max(d_s, d_t)`, and for
/// `beta < 1` it ranks "closer to source" (small `d_s`, large `d_t`) below
/// the swapped case.
pub fn harmonic_score(d_s: f64, d_t: f64, beta: f64) -> f64 {
    debug_assert!(d_s > 0.0 && d_s < 1.0, "d_s {d_s} outside (0,1)");
    debug_assert!(d_t > 0.0 && d_t < 1.0, "d_t {d_t} outside (0,1)");
    debug_assert!((0.0..1.0).contains(&beta), "beta {beta} outside [0,1)");
    let b2 = beta * beta;
    (1.0 + b2) * d_s * d_t / (b2 * d_s + d_t)
}

/// OOD levels for a batch of images: `d = 1 - D(x)` per domain discriminator,
/// clamped to `[OOD_EPS, 1 - OOD_EPS]`.
pub fn ood_levels_batch(pair: &TranslationPair, images: &[&Image]) -> Result<Vec<OodScores>> {
    if images.is_empty() {
        return Err(Error::invalid("empty batch for ood_levels"));
    }
    let chunks: Vec<&[&Image]> = images.chunks(64).collect();
    let results = par::map(&chunks, |chunk| -> Result<Vec<OodScores>> {
        let x = crate::recognizer::Recognizer::batch_array(chunk)?;
        let (ls, _) = pair.d_s.forward(&x);
        let (lt, _) = pair.d_t.forward(&x);
        Ok(ls
            .iter()
            .zip(&lt)
            .map(|(&a, &b)| {
                let d_s = 1.0 - sigmoid64(a as f64);
                let d_t = 1.0 - sigmoid64(b as f64);
                OodScores {
                    d_s: d_s.clamp(OOD_EPS, 1.0 - OOD_EPS),
                    d_t: d_t.clamp(OOD_EPS, 1.0 - OOD_EPS),
                }
            })
            .collect())
    });
    let mut out = Vec::with_capacity(images.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Single-image convenience wrapper around [`ood_levels_batch`].
pub fn ood_levels(pair: &TranslationPair, image: &Image) -> Result<OodScores> {
    Ok(ood_levels_batch(pair, &[image])?[0])
}

fn sigmoid64(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Score every target sample with the harmonic gap estimate.
pub fn score_targets(
    pair: &TranslationPair,
    targets: &[(String, Image)],
    beta: f64,
) -> Result<Vec<ScoredSample>> {
    let images: Vec<&Image> = targets.iter().map(|(_, img)| img).collect();
    let oods = ood_levels_batch(pair, &images)?;
    Ok(targets
        .iter()
        .zip(&oods)
        .map(|((id, _), ood)| ScoredSample {
            id: id.clone(),
            score: harmonic_score(ood.d_s, ood.d_t, beta),
            provenance: Some((ood.d_s, ood.d_t)),
            estimator: "HDGE".to_string(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::rng::derive_rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn beta_zero_reduces_to_d_s() {
        let mut rng = derive_rng(31, "hdge-beta0");
        for _ in 0..1000 {
            let d_s = 0.001 + 0.998 * rng.gen::<f64>();
            let d_t = 0.001 + 0.998 * rng.gen::<f64>();
            let d = harmonic_score(d_s, d_t, 0.0);
            assert!((d - d_s).abs() < 1e-12, "beta=0: {d} vs {d_s}");
        }
    }

    #[test]
    fn equal_coordinates_return_that_value() {
        let mut rng = derive_rng(32, "hdge-eq");
        for _ in 0..1000 {
            let d = 0.001 + 0.998 * rng.gen::<f64>();
            let beta = 0.999 * rng.gen::<f64>();
            let s = harmonic_score(d, d, beta);
            assert!((s - d).abs() < 1e-12);
        }
    }

    #[test]
    fn worked_example() {
        let d = harmonic_score(0.2, 0.8, 0.5);
        assert!((d - 0.2 / 0.85).abs() < 1e-12);
        assert!((d - 0.235294).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn bounded_by_min_and_max(
            d_s in 1e-6f64..0.999999,
            d_t in 1e-6f64..0.999999,
            beta in 0.0f64..0.999,
        ) {
            let s = harmonic_score(d_s, d_t, beta);
            let lo = d_s.min(d_t);
            let hi = d_s.max(d_t);
            prop_assert!(s >= lo - 1e-12 && s <= hi + 1e-12);
        }

        #[test]
        fn monotone_in_both_arguments(
            d_s in 1e-4f64..0.99,
            d_t in 1e-4f64..0.99,
            beta in 0.05f64..0.999,
            bump in 1e-4f64..0.009,
        ) {
            let base = harmonic_score(d_s, d_t, beta);
            prop_assert!(harmonic_score(d_s + bump, d_t, beta) > base);
            // Strict in d_t only for beta > 0; at beta = 0 the score reduces
            // to d_s and d_t changes it by at most float rounding.
            prop_assert!(harmonic_score(d_s, d_t + bump, beta) > base);
            let at_zero = harmonic_score(d_s, d_t + bump, 0.0) - harmonic_score(d_s, d_t, 0.0);
            prop_assert!(at_zero.abs() < 1e-12);
        }

        #[test]
        fn source_bias_orders_swapped_pairs(
            a in 1e-5f64..0.99,
            gap in 1e-4f64..0.5,
            beta in 0.0f64..0.999,
        ) {
            let b = (a + gap).min(0.999999);
            prop_assume!(a < b);
            // Small d_S with large d_T ("closer to source") scores lower.
            prop_assert!(harmonic_score(a, b, beta) < harmonic_score(b, a, beta));
        }
    }
}
