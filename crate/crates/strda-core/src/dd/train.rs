//! Focal-loss training of the domain discriminator: raw source images are
//! class 0, raw target images class 1.

use super::{focal_loss_with_grad, DdParams, FocalConfig};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::nn::rng::derive_rng;
use crate::nn::{AdamW, Model, OneCycle};
use crate::recognizer::{sampler, LossPoint, Recognizer};

/// Train the classifier starting from the baseline recognizer's trunk.
pub fn train_dd(
    source: &[Image],
    target: &[Image],
    baseline: &Recognizer,
    cfg: &FocalConfig,
    seed: u64,
) -> Result<(DdParams, Vec<LossPoint>)> {
    cfg.validate()?;
    if source.is_empty() || target.is_empty() {
        return Err(Error::invalid("train_dd needs non-empty corpora"));
    }
    let mut dd = DdParams::from_baseline(baseline, seed);
    let mut opt = AdamW::new(cfg.weight_decay);
    let schedule = OneCycle::new(cfg.max_lr, cfg.iters);
    let mut src_sampler = sampler(source.len(), derive_rng(seed, "dd-src"));
    let mut tgt_sampler = sampler(target.len(), derive_rng(seed, "dd-tgt"));
    let mut curve = Vec::new();

    for t in 0..cfg.iters {
        let bs = cfg.batch_size;
        let si = src_sampler.next_batch(bs.min(source.len()));
        let ti = tgt_sampler.next_batch(bs.min(target.len()));
        let src_batch: Vec<&Image> = si.iter().map(|&i| &source[i]).collect();
        let tgt_batch: Vec<&Image> = ti.iter().map(|&i| &target[i]).collect();
        // One forward over the concatenated batch keeps the trunk pass shared.
        let all: Vec<&Image> = src_batch.iter().chain(tgt_batch.iter()).copied().collect();
        let x = Recognizer::batch_array(&all)?;
        let (logits, cache) = dd.forward(&x);
        let (l_src, l_tgt) = logits.split_at(src_batch.len());
        let (loss, g_src, g_tgt) = focal_loss_with_grad(l_src, l_tgt, cfg.gamma as f32);
        if !loss.is_finite() {
            return Err(Error::Training {
                step: t,
                detail: format!("non-finite focal loss {loss}"),
            });
        }
        let dlogits: Vec<f32> = g_src.into_iter().chain(g_tgt).collect();
        dd.zero_grads();
        dd.backward(&cache, &dlogits);
        opt.step(&mut dd, schedule.lr(t));
        if t % 25 == 0 || t + 1 == cfg.iters {
            curve.push(LossPoint {
                step: t,
                loss,
                lr: schedule.lr(t),
            });
        }
    }
    dd.step += cfg.iters;
    Ok((dd, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{perturb, render_word};

    fn corpora(n_src: usize, n_tgt: usize) -> (Vec<Image>, Vec<Image>) {
        let words = ["one", "two", "six", "ten", "red", "blue"];
        let src: Vec<Image> = (0..n_src)
            .map(|i| render_word(words[i % words.len()], i % 2, i as u64).unwrap())
            .collect();
        let tgt: Vec<Image> = (0..n_tgt)
            .map(|i| {
                let clean = render_word(words[(i + 2) % words.len()], i % 2, 50 + i as u64).unwrap();
                perturb(&clean, 0.7, i as u64).unwrap()
            })
            .collect();
        (src, tgt)
    }

    #[test]
    fn loss_decreases_on_imbalanced_corpus() {
        // 2:1 imbalance, no class weights: the focal objective handles it.
        let (src, tgt) = corpora(24, 12);
        let cfg = FocalConfig {
            iters: 40,
            batch_size: 8,
            max_lr: 2e-3,
            ..FocalConfig::default()
        };
        let baseline = Recognizer::init(1);
        let (_, curve) = train_dd(&src, &tgt, &baseline, &cfg, 3).unwrap();
        assert!(curve.last().unwrap().loss < curve.first().unwrap().loss);
    }

    #[test]
    fn training_is_deterministic() {
        let (src, tgt) = corpora(8, 6);
        let cfg = FocalConfig {
            iters: 10,
            batch_size: 4,
            ..FocalConfig::default()
        };
        let baseline = Recognizer::init(2);
        let (mut d1, _) = train_dd(&src, &tgt, &baseline, &cfg, 7).unwrap();
        let (mut d2, _) = train_dd(&src, &tgt, &baseline, &cfg, 7).unwrap();
        for ((n1, v1), (n2, v2)) in d1.snapshot().iter().zip(&d2.snapshot()) {
            assert_eq!(n1, n2);
            assert_eq!(v1, v2, "{n1} differs");
        }
    }

    #[test]
    fn invalid_gamma_rejected() {
        let (src, tgt) = corpora(2, 2);
        let baseline = Recognizer::init(1);
        let cfg = FocalConfig {
            gamma: -1.0,
            ..FocalConfig::default()
        };
        assert!(train_dd(&src, &tgt, &baseline, &cfg, 1).is_err());
    }
}
