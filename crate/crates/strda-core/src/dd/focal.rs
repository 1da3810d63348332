//! Focal loss over raw binary-classifier outputs (class 0 = source,
//! class 1 = target):
//!
//! `L = -mean_S sigma(f)^g * log(1 - sigma(f)) - mean_T (1 - sigma(f))^g * log(sigma(f))`
//!
//! Generic over the float type; gradient checks instantiate it at `f64`.

use num_traits::Float;

fn sigmoid<T: Float>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

fn log_clamped<T: Float>(x: T) -> T {
    x.max(T::from(1e-12).unwrap()).ln()
}

/// Focal loss from raw (pre-sigmoid) scores. `gamma = 0` reduces to the mean
/// binary cross-entropy over both classes.
pub fn focal_loss<T: Float>(scores_on_source: &[T], scores_on_target: &[T], gamma: T) -> T {
    let mut loss = T::zero();
    if !scores_on_source.is_empty() {
        let n = T::from(scores_on_source.len()).unwrap();
        for &f in scores_on_source {
            let s = sigmoid(f);
            loss = loss - s.powf(gamma) * log_clamped(T::one() - s) / n;
        }
    }
    if !scores_on_target.is_empty() {
        let n = T::from(scores_on_target.len()).unwrap();
        for &f in scores_on_target {
            let s = sigmoid(f);
            loss = loss - (T::one() - s).powf(gamma) * log_clamped(s) / n;
        }
    }
    loss
}

/// Focal loss plus analytic gradients wrt the raw scores.
pub fn focal_loss_with_grad<T: Float>(
    scores_on_source: &[T],
    scores_on_target: &[T],
    gamma: T,
) -> (T, Vec<T>, Vec<T>) {
    let loss = focal_loss(scores_on_source, scores_on_target, gamma);
    let one = T::one();
    let mut g_src = Vec::with_capacity(scores_on_source.len());
    if !scores_on_source.is_empty() {
        let n = T::from(scores_on_source.len()).unwrap();
        for &f in scores_on_source {
            let s = sigmoid(f);
            // d/df [-s^g ln(1-s)] = -g s^g (1-s) ln(1-s) + s^(g+1)
            let term = -gamma * s.powf(gamma) * (one - s) * log_clamped(one - s) + s.powf(gamma) * s;
            g_src.push(term / n);
        }
    }
    let mut g_tgt = Vec::with_capacity(scores_on_target.len());
    if !scores_on_target.is_empty() {
        let n = T::from(scores_on_target.len()).unwrap();
        for &f in scores_on_target {
            let s = sigmoid(f);
            // d/df [-(1-s)^g ln s] = g (1-s)^g s ln s - (1-s)^(g+1)
            let term =
                gamma * (one - s).powf(gamma) * s * log_clamped(s) - (one - s).powf(gamma) * (one - s);
            g_tgt.push(term / n);
        }
    }
    (loss, g_src, g_tgt)
}

/// Per-sample focal contribution for one source-class sample (used by the
/// down-weighting property checks).
pub fn focal_term_source<T: Float>(raw: T, gamma: T) -> T {
    let s = sigmoid(raw);
    -s.powf(gamma) * log_clamped(T::one() - s)
}

/// Per-sample focal contribution for one target-class sample.
pub fn focal_term_target<T: Float>(raw: T, gamma: T) -> T {
    let s = sigmoid(raw);
    -(T::one() - s).powf(gamma) * log_clamped(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::rng::derive_rng;
    use rand::Rng;

    fn bce(src: &[f64], tgt: &[f64]) -> f64 {
        let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
        let mut l = 0.0;
        for &f in src {
            l -= (1.0 - sig(f)).max(1e-12).ln() / src.len() as f64;
        }
        for &f in tgt {
            l -= sig(f).max(1e-12).ln() / tgt.len() as f64;
        }
        l
    }

    #[test]
    fn gamma_zero_is_bce() {
        let mut rng = derive_rng(51, "focal-bce");
        for _ in 0..100 {
            let src: Vec<f64> = (0..5).map(|_| rng.gen::<f64>() * 8.0 - 4.0).collect();
            let tgt: Vec<f64> = (0..7).map(|_| rng.gen::<f64>() * 8.0 - 4.0).collect();
            let fl = focal_loss(&src, &tgt, 0.0);
            assert!((fl - bce(&src, &tgt)).abs() < 1e-9);
        }
    }

    #[test]
    fn printed_value_at_half() {
        // One source and one target sample, both sigma = 0.5, gamma = 2:
        // 0.25 ln 2 + 0.25 ln 2.
        let l = focal_loss(&[0.0f64], &[0.0f64], 2.0);
        let expect = 0.5 * std::f64::consts::LN_2;
        assert!((l - expect).abs() < 1e-12);
        assert!((l - 0.3466).abs() < 1e-4);
    }

    #[test]
    fn perfectly_separated_scores_vanish() {
        let l = focal_loss(&[-30.0f64], &[30.0f64], 2.0);
        assert!(l.abs() < 1e-9, "loss at perfect separation: {l}");
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = derive_rng(52, "focal-grad");
        for gamma in [0.0f64, 1.0, 2.0] {
            for _ in 0..30 {
                let src: Vec<f64> = (0..4).map(|_| rng.gen::<f64>() * 6.0 - 3.0).collect();
                let tgt: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() * 6.0 - 3.0).collect();
                let (_, gs, gt) = focal_loss_with_grad(&src, &tgt, gamma);
                let h = 1e-6;
                for i in 0..src.len() {
                    let mut sp = src.clone();
                    sp[i] += h;
                    let lp = focal_loss(&sp, &tgt, gamma);
                    sp[i] -= 2.0 * h;
                    let lm = focal_loss(&sp, &tgt, gamma);
                    let fd = (lp - lm) / (2.0 * h);
                    let denom = gs[i].abs().max(fd.abs()).max(1e-8);
                    assert!(
                        ((fd - gs[i]) / denom).abs() < 1e-4,
                        "gamma={gamma} source grad {i}: fd={fd} an={}",
                        gs[i]
                    );
                }
                for i in 0..tgt.len() {
                    let mut tp = tgt.clone();
                    tp[i] += h;
                    let lp = focal_loss(&src, &tp, gamma);
                    tp[i] -= 2.0 * h;
                    let lm = focal_loss(&src, &tp, gamma);
                    let fd = (lp - lm) / (2.0 * h);
                    let denom = gt[i].abs().max(fd.abs()).max(1e-8);
                    assert!(
                        ((fd - gt[i]) / denom).abs() < 1e-4,
                        "gamma={gamma} target grad {i}: fd={fd} an={}",
                        gt[i]
                    );
                }
            }
        }
    }

    #[test]
    fn correctly_classified_loss_decreases_in_gamma() {
        // Source sample classified correctly: sigma < 0.5 (raw < 0).
        let gammas = [0.0f64, 0.5, 1.0, 2.0, 4.0];
        for raw in [-0.2f64, -1.0, -3.0] {
            let mut prev = f64::INFINITY;
            for &g in &gammas {
                let l = focal_term_source(raw, g);
                assert!(l < prev, "source term not decreasing at raw={raw} g={g}");
                prev = l;
            }
        }
        for raw in [0.2f64, 1.0, 3.0] {
            let mut prev = f64::INFINITY;
            for &g in &gammas {
                let l = focal_term_target(raw, g);
                assert!(l < prev, "target term not decreasing at raw={raw} g={g}");
                prev = l;
            }
        }
    }
}
