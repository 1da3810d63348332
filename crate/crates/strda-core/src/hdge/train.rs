//! Adversarial training of the two translation directions.
//!
//! Per step: generators translate one batch each way, the cycle
//! reconstructions are formed, generator losses (non-saturating adversarial
//! plus weighted cycle) are backpropagated and applied; then the
//! discriminators are updated against the same pre-update fakes under the
//! printed objective. Single-threaded and bit-reproducible for a given seed.

use super::loss::{
    cycle_l1, disc_loss_from_logits, disc_loss_least_squares, gen_loss_from_logits,
    gen_loss_least_squares,
};
use super::models::TranslationPair;
use super::{AdvLossForm, HdgeConfig};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::nn::rng::derive_rng;
use crate::nn::{AdamW, Model};
use crate::recognizer::Recognizer;
use ndarray::Array4;

/// Loss components for one batch pair, per the printed objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvLossParts {
    pub d_t_loss: f32,
    pub d_s_loss: f32,
    pub g_t_loss: f32,
    pub g_s_loss: f32,
    /// Present iff `lambda_cyc > 0`; already scaled by `lambda_cyc`.
    pub cycle_loss: Option<f32>,
}

/// Sampled GAN loss curve point.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GanLossPoint {
    pub step: u64,
    pub d_t: f32,
    pub d_s: f32,
    pub g_t: f32,
    pub g_s: f32,
    pub cycle: f32,
}

/// Evaluate all loss components for the given batches without updating
/// anything. Discriminator terms use `log D` on real and `log(1-D)` on
/// translated samples; generator terms oppose them.
pub fn adversarial_losses(
    pair: &TranslationPair,
    source: &[&Image],
    target: &[&Image],
    cfg: &HdgeConfig,
) -> Result<AdvLossParts> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::invalid("adversarial_losses needs non-empty batches"));
    }
    let xs = Recognizer::batch_array(source)?;
    let xt = Recognizer::batch_array(target)?;
    let (fake_t, _) = pair.g_t.forward(&xs);
    let (fake_s, _) = pair.g_s.forward(&xt);
    let (l_real_t, _) = pair.d_t.forward(&xt);
    let (l_fake_t, _) = pair.d_t.forward(&fake_t);
    let (l_real_s, _) = pair.d_s.forward(&xs);
    let (l_fake_s, _) = pair.d_s.forward(&fake_s);

    let (d_t_loss, g_t_loss, d_s_loss, g_s_loss) = match cfg.adv_loss {
        AdvLossForm::Log => {
            let (dt, _, _) = disc_loss_from_logits(&l_real_t, &l_fake_t);
            let (gt, _) = gen_loss_from_logits(&l_fake_t);
            let (ds, _, _) = disc_loss_from_logits(&l_real_s, &l_fake_s);
            let (gs, _) = gen_loss_from_logits(&l_fake_s);
            (dt, gt, ds, gs)
        }
        AdvLossForm::LeastSquares => {
            let (dt, _, _) = disc_loss_least_squares(&l_real_t, &l_fake_t);
            let (gt, _) = gen_loss_least_squares(&l_fake_t);
            let (ds, _, _) = disc_loss_least_squares(&l_real_s, &l_fake_s);
            let (gs, _) = gen_loss_least_squares(&l_fake_s);
            (dt, gt, ds, gs)
        }
    };
    let cycle_loss = if cfg.lambda_cyc > 0.0 {
        let (rec_s, _) = pair.g_s.forward(&fake_t);
        let (rec_t, _) = pair.g_t.forward(&fake_s);
        let (c1, _) = cycle_l1(rec_s.as_slice().unwrap(), xs.as_slice().unwrap());
        let (c2, _) = cycle_l1(rec_t.as_slice().unwrap(), xt.as_slice().unwrap());
        Some(cfg.lambda_cyc * (c1 + c2))
    } else {
        None
    };
    for (name, l) in [
        ("d_t", d_t_loss),
        ("d_s", d_s_loss),
        ("g_t", g_t_loss),
        ("g_s", g_s_loss),
        ("cycle", cycle_loss.unwrap_or(0.0)),
    ] {
        if !l.is_finite() {
            return Err(Error::Training {
                step: pair.step,
                detail: format!("non-finite {name} loss"),
            });
        }
    }
    Ok(AdvLossParts {
        d_t_loss,
        d_s_loss,
        g_t_loss,
        g_s_loss,
        cycle_loss,
    })
}

/// Train the translation pair. Zero iterations returns the initialized pair
/// unchanged.
pub fn train_hdge(
    source: &[Image],
    target: &[Image],
    cfg: &HdgeConfig,
    seed: u64,
) -> Result<(TranslationPair, Vec<GanLossPoint>)> {
    cfg.validate()?;
    if source.is_empty() || target.is_empty() {
        return Err(Error::invalid("train_hdge needs non-empty corpora"));
    }
    let mut pair = TranslationPair::init(seed);
    let mut opt_gt = gan_adam(cfg);
    let mut opt_gs = gan_adam(cfg);
    let mut opt_dt = gan_adam(cfg);
    let mut opt_ds = gan_adam(cfg);

    let mut src_sampler = crate::recognizer::sampler(source.len(), derive_rng(seed, "hdge-src"));
    let mut tgt_sampler = crate::recognizer::sampler(target.len(), derive_rng(seed, "hdge-tgt"));
    let mut curve = Vec::new();

    for t in 0..cfg.iters {
        let bs = cfg.batch_size;
        let si = src_sampler.next_batch(bs.min(source.len()));
        let ti = tgt_sampler.next_batch(bs.min(target.len()));
        let src_batch: Vec<&Image> = si.iter().map(|&i| &source[i]).collect();
        let tgt_batch: Vec<&Image> = ti.iter().map(|&i| &target[i]).collect();
        let xs = Recognizer::batch_array(&src_batch)?;
        let xt = Recognizer::batch_array(&tgt_batch)?;

        // Generator pass (uses discriminator state from step start).
        pair.g_t.zero_grads();
        pair.g_s.zero_grads();
        pair.d_t.zero_grads();
        pair.d_s.zero_grads();

        let (fake_t, gt_cache) = pair.g_t.forward(&xs);
        let (fake_s, gs_cache) = pair.g_s.forward(&xt);
        let (l_fake_t, dt_fake_cache) = pair.d_t.forward(&fake_t);
        let (l_fake_s, ds_fake_cache) = pair.d_s.forward(&fake_s);

        let (g_t_adv, g_t_grads) = match cfg.adv_loss {
            AdvLossForm::Log => gen_loss_from_logits(&l_fake_t),
            AdvLossForm::LeastSquares => gen_loss_least_squares(&l_fake_t),
        };
        let (g_s_adv, g_s_grads) = match cfg.adv_loss {
            AdvLossForm::Log => gen_loss_from_logits(&l_fake_s),
            AdvLossForm::LeastSquares => gen_loss_least_squares(&l_fake_s),
        };
        // Adversarial gradient into the fakes, through the (frozen) critics.
        let dfake_t_adv = pair
            .d_t
            .backward(&dt_fake_cache, &g_t_grads);
        let dfake_s_adv = pair
            .d_s
            .backward(&ds_fake_cache, &g_s_grads);

        // Cycle reconstructions and their gradients.
        let mut cycle_total = 0.0f32;
        let (mut dfake_t, mut dfake_s) = (dfake_t_adv, dfake_s_adv);
        if cfg.lambda_cyc > 0.0 {
            let (rec_s, rec_s_cache) = pair.g_s.forward(&fake_t);
            let (rec_t, rec_t_cache) = pair.g_t.forward(&fake_s);
            let (c_s, dc_s) = cycle_l1(rec_s.as_slice().unwrap(), xs.as_slice().unwrap());
            let (c_t, dc_t) = cycle_l1(rec_t.as_slice().unwrap(), xt.as_slice().unwrap());
            cycle_total = cfg.lambda_cyc * (c_s + c_t);
            let drec_s = Array4::from_shape_vec(
                rec_s.dim(),
                dc_s.iter().map(|&g| g * cfg.lambda_cyc).collect(),
            )
            .unwrap();
            let drec_t = Array4::from_shape_vec(
                rec_t.dim(),
                dc_t.iter().map(|&g| g * cfg.lambda_cyc).collect(),
            )
            .unwrap();
            // Cycle gradients flow through the second generator into the fakes.
            dfake_t = dfake_t + pair.g_s.backward(&rec_s_cache, &drec_s);
            dfake_s = dfake_s + pair.g_t.backward(&rec_t_cache, &drec_t);
        }
        pair.g_t.backward(&gt_cache, &dfake_t);
        pair.g_s.backward(&gs_cache, &dfake_s);
        // Discriminator grads were polluted by the pass-through backwards;
        // generators step first, critics re-zero below.
        opt_gt.step(&mut pair.g_t, cfg.lr);
        opt_gs.step(&mut pair.g_s, cfg.lr);

        // Discriminator pass against the same pre-update fakes.
        pair.d_t.zero_grads();
        pair.d_s.zero_grads();
        let (l_real_t, dt_real_cache) = pair.d_t.forward(&xt);
        let (l_fake_t2, dt_fake_cache2) = pair.d_t.forward(&fake_t);
        let (l_real_s, ds_real_cache) = pair.d_s.forward(&xs);
        let (l_fake_s2, ds_fake_cache2) = pair.d_s.forward(&fake_s);
        let (d_t_loss, dt_gr, dt_gf) = match cfg.adv_loss {
            AdvLossForm::Log => disc_loss_from_logits(&l_real_t, &l_fake_t2),
            AdvLossForm::LeastSquares => disc_loss_least_squares(&l_real_t, &l_fake_t2),
        };
        let (d_s_loss, ds_gr, ds_gf) = match cfg.adv_loss {
            AdvLossForm::Log => disc_loss_from_logits(&l_real_s, &l_fake_s2),
            AdvLossForm::LeastSquares => disc_loss_least_squares(&l_real_s, &l_fake_s2),
        };
        pair.d_t.backward(&dt_real_cache, &dt_gr);
        pair.d_t.backward(&dt_fake_cache2, &dt_gf);
        pair.d_s.backward(&ds_real_cache, &ds_gr);
        pair.d_s.backward(&ds_fake_cache2, &ds_gf);
        opt_dt.step(&mut pair.d_t, cfg.lr);
        opt_ds.step(&mut pair.d_s, cfg.lr);

        for (name, l) in [
            ("d_t", d_t_loss),
            ("d_s", d_s_loss),
            ("g_t", g_t_adv),
            ("g_s", g_s_adv),
            ("cycle", cycle_total),
        ] {
            if !l.is_finite() {
                return Err(Error::Training {
                    step: t,
                    detail: format!("non-finite {name} loss during adversarial training"),
                });
            }
        }
        if t % 25 == 0 || t + 1 == cfg.iters {
            curve.push(GanLossPoint {
                step: t,
                d_t: d_t_loss,
                d_s: d_s_loss,
                g_t: g_t_adv,
                g_s: g_s_adv,
                cycle: cycle_total,
            });
        }
    }
    pair.step += cfg.iters;
    Ok((pair, curve))
}

fn gan_adam(cfg: &HdgeConfig) -> AdamW {
    let _ = cfg;
    let mut opt = AdamW::new(0.0);
    opt.beta1 = 0.5;
    opt
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{perturb, render_word};
    use crate::nn::rng::derive_rng;
    use rand::Rng;

    fn tiny_corpora(n: usize) -> (Vec<Image>, Vec<Image>) {
        let words = ["cat", "dog", "pen", "sky", "map", "cup"];
        let mut rng = derive_rng(5, "hdge-test-data");
        let src: Vec<Image> = (0..n)
            .map(|i| render_word(words[i % words.len()], i % 2, i as u64).unwrap())
            .collect();
        let tgt: Vec<Image> = (0..n)
            .map(|i| {
                let clean = render_word(words[(i + 1) % words.len()], i % 2, 100 + i as u64).unwrap();
                perturb(&clean, 0.3 + 0.6 * rng.gen::<f32>(), i as u64).unwrap()
            })
            .collect();
        (src, tgt)
    }

    #[test]
    fn half_output_discriminator_example() {
        // Zero the final layers so both discriminators emit logit 0 => D = 0.5.
        let (src, tgt) = tiny_corpora(4);
        let mut pair = TranslationPair::init(1);
        pair.d_t.fc.w.fill(0.0);
        pair.d_t.fc.b.fill(0.0);
        pair.d_s.fc.w.fill(0.0);
        pair.d_s.fc.b.fill(0.0);
        let cfg = HdgeConfig {
            lambda_cyc: 0.0,
            ..HdgeConfig::default()
        };
        let srcr: Vec<&Image> = src.iter().collect();
        let tgtr: Vec<&Image> = tgt.iter().collect();
        let parts = adversarial_losses(&pair, &srcr, &tgtr, &cfg).unwrap();
        let expect = 2.0 * std::f32::consts::LN_2;
        assert!((parts.d_t_loss - expect).abs() < 1e-4, "{}", parts.d_t_loss);
        assert!((parts.d_s_loss - expect).abs() < 1e-4);
        assert!(parts.cycle_loss.is_none(), "lambda_cyc = 0 must drop the term");
    }

    #[test]
    fn cycle_term_present_when_enabled() {
        let (src, tgt) = tiny_corpora(3);
        let pair = TranslationPair::init(2);
        let cfg = HdgeConfig::default();
        let srcr: Vec<&Image> = src.iter().collect();
        let tgtr: Vec<&Image> = tgt.iter().collect();
        let parts = adversarial_losses(&pair, &srcr, &tgtr, &cfg).unwrap();
        let c = parts.cycle_loss.expect("cycle term expected");
        assert!(c >= 0.0 && c.is_finite());
    }

    #[test]
    fn zero_iterations_returns_initialized_pair() {
        let (src, tgt) = tiny_corpora(3);
        let cfg = HdgeConfig {
            iters: 0,
            ..HdgeConfig::default()
        };
        let (mut pair, curve) = train_hdge(&src, &tgt, &cfg, 9).unwrap();
        assert!(curve.is_empty());
        let mut fresh = TranslationPair::init(9);
        let a = pair.snapshot();
        let b = fresh.snapshot();
        for ((n1, d1), (n2, d2)) in a.iter().zip(&b) {
            assert_eq!(n1, n2);
            assert_eq!(d1, d2, "{n1} changed with zero iterations");
        }
    }

    #[test]
    fn training_is_deterministic_and_finite() {
        let (src, tgt) = tiny_corpora(6);
        let cfg = HdgeConfig {
            iters: 8,
            batch_size: 3,
            ..HdgeConfig::default()
        };
        let (mut p1, c1) = train_hdge(&src, &tgt, &cfg, 4).unwrap();
        let (mut p2, c2) = train_hdge(&src, &tgt, &cfg, 4).unwrap();
        assert_eq!(c1.len(), c2.len());
        let s1 = p1.snapshot();
        let s2 = p2.snapshot();
        for ((n1, d1), (n2, d2)) in s1.iter().zip(&s2) {
            assert_eq!(n1, n2);
            assert_eq!(d1, d2, "{n1} differs between identical runs");
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let (src, tgt) = tiny_corpora(2);
        let cfg = HdgeConfig {
            beta: 1.0,
            ..HdgeConfig::default()
        };
        assert!(train_hdge(&src, &tgt, &cfg, 1).is_err());
    }
}
