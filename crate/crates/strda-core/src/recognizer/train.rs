//! Supervised baseline training on the labeled source corpus.

use super::{softmax_ce, Recognizer};
use crate::corpus::charset::{Charset, NUM_CLASSES, SEQ_LEN};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::nn::rng::derive_rng;
use crate::nn::{AdamW, Model, OneCycle};
use ndarray::Array3;
use rand::seq::SliceRandom;

/// Optimization settings shared by the baseline and self-training stages.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub iters: u64,
    pub batch_size: usize,
    pub max_lr: f32,
    pub weight_decay: f32,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iters: 1500,
            batch_size: 32,
            max_lr: 5e-4,
            weight_decay: 0.005,
        }
    }
}

/// One sampled point of a training loss curve.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct LossPoint {
    pub step: u64,
    pub loss: f32,
    pub lr: f32,
}

/// Cycles through shuffled epochs of `0..n`, reshuffling with the given RNG
/// when exhausted.
pub struct EpochSampler {
    order: Vec<usize>,
    pos: usize,
    rng: rand_chacha::ChaCha8Rng,
}

/// Epoch-shuffled index sampler over `0..n`.
pub fn sampler(n: usize, rng: rand_chacha::ChaCha8Rng) -> EpochSampler {
    EpochSampler::new(n, rng)
}

impl EpochSampler {
    pub fn new(n: usize, rng: rand_chacha::ChaCha8Rng) -> Self {
        EpochSampler {
            order: (0..n).collect(),
            pos: n, // force shuffle on first draw
            rng,
        }
    }

    pub fn next_batch(&mut self, k: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            if self.pos >= self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.pos = 0;
            }
            out.push(self.order[self.pos]);
            self.pos += 1;
        }
        out
    }
}

/// Train from `init` on the labeled source set. Deterministic given the
/// seed; emits a sampled loss curve.
pub fn train_supervised(
    init: Recognizer,
    source: &[(String, Image, String)],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(Recognizer, Vec<LossPoint>)> {
    if source.is_empty() {
        return Err(Error::invalid("supervised training needs a non-empty set"));
    }
    let cs = Charset::standard();
    let mut targets = Vec::with_capacity(source.len());
    for (id, _, label) in source {
        cs.validate_word(label)
            .map_err(|e| Error::invalid(format!("sample {id}: {e}")))?;
        targets.push(cs.encode_label(label)?);
    }
    let images: Vec<&Image> = source.iter().map(|(_, img, _)| img).collect();

    let mut model = init;
    let mut opt = AdamW::new(cfg.weight_decay);
    let schedule = OneCycle::new(cfg.max_lr, cfg.iters);
    let mut sampler = EpochSampler::new(source.len(), derive_rng(seed, "supervised-batches"));
    let mut curve = Vec::new();

    for t in 0..cfg.iters {
        let idx = sampler.next_batch(cfg.batch_size.min(source.len()));
        let batch: Vec<&Image> = idx.iter().map(|&i| images[i]).collect();
        let x = Recognizer::batch_array(&batch)?;
        let (logits, cache) = model.forward_logits(&x);
        let bs = idx.len();
        let mut dlogits = Array3::zeros(logits.dim());
        let mut batch_loss = 0.0f64;
        for (b, &i) in idx.iter().enumerate() {
            let lg = &logits;
            let row: Vec<f32> = (0..SEQ_LEN)
                .flat_map(|p| (0..NUM_CLASSES).map(move |c| lg[[b, p, c]]))
                .collect();
            let (l, g) = softmax_ce(&row, &targets[i]);
            batch_loss += l as f64;
            let w = 1.0 / bs as f32;
            for p in 0..SEQ_LEN {
                for c in 0..NUM_CLASSES {
                    dlogits[[b, p, c]] = g[p * NUM_CLASSES + c] * w;
                }
            }
        }
        let batch_loss = (batch_loss / bs as f64) as f32;
        if !batch_loss.is_finite() {
            return Err(Error::Training {
                step: t,
                detail: format!("non-finite supervised loss {batch_loss}"),
            });
        }
        model.zero_grads();
        model.backward(&cache, &dlogits);
        opt.step(&mut model, schedule.lr(t));
        if t % 25 == 0 || t + 1 == cfg.iters {
            curve.push(LossPoint {
                step: t,
                loss: batch_loss,
                lr: schedule.lr(t),
            });
        }
    }
    model.step += cfg.iters;
    Ok((model, curve))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::render_word;
    use crate::nn::Model;

    fn tiny_source(n: usize) -> Vec<(String, Image, String)> {
        let words = ["cat", "dog", "sun", "map", "box", "net", "cup", "key"];
        (0..n)
            .map(|i| {
                let w = words[i % words.len()];
                (
                    format!("s{i}"),
                    render_word(w, i % 2, i as u64).unwrap(),
                    w.to_string(),
                )
            })
            .collect()
    }

    #[test]
    fn loss_decreases_on_tiny_set() {
        let src = tiny_source(16);
        let cfg = TrainConfig {
            iters: 60,
            batch_size: 8,
            max_lr: 3e-3,
            weight_decay: 0.005,
        };
        let (_, curve) = train_supervised(Recognizer::init(1), &src, &cfg, 5).unwrap();
        assert!(curve.last().unwrap().loss < curve.first().unwrap().loss);
    }

    #[test]
    fn training_is_deterministic() {
        let src = tiny_source(12);
        let cfg = TrainConfig {
            iters: 20,
            batch_size: 6,
            max_lr: 1e-3,
            weight_decay: 0.005,
        };
        let (mut m1, _) = train_supervised(Recognizer::init(2), &src, &cfg, 9).unwrap();
        let (mut m2, _) = train_supervised(Recognizer::init(2), &src, &cfg, 9).unwrap();
        let s1 = m1.snapshot();
        let s2 = m2.snapshot();
        assert_eq!(s1.len(), s2.len());
        for ((n1, d1), (n2, d2)) in s1.iter().zip(&s2) {
            assert_eq!(n1, n2);
            assert_eq!(d1, d2, "parameters differ for {n1}");
        }
    }

    #[test]
    fn empty_source_rejected() {
        let cfg = TrainConfig::default();
        assert!(train_supervised(Recognizer::init(1), &[], &cfg, 1).is_err());
    }
}
