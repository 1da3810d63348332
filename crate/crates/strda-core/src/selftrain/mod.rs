//! Stage 2: progressive self-training.
//!
//! Rounds run strictly in order over the partition's subsets. Each round
//! pseudo-labels its own subset with the previous round's model (hard labels
//! only), computes the mean confidence `m`, and minimizes the adaptive mixed
//! objective `(1 - m) * mean(source) + m * mean(pseudo)` for its share of the
//! iteration budget, with augmentation on the training inputs. Optimizer
//! state and schedule restart every round; round randomness is keyed by
//! `(seed, round index)` alone, so a run can resume from any completed round
//! and reproduce an uninterrupted run bit for bit.

mod augment;

pub use augment::{augment, AugmentPolicy};

use crate::corpus::charset::{Charset, NUM_CLASSES, SEQ_LEN};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::nn::rng::derive_rng;
use crate::nn::{load_checkpoint, save_checkpoint, AdamW, Model, OneCycle};
use crate::recognizer::{pseudo_label, sampler, softmax_ce, LossPoint, Recognizer};
use crate::stratifier::Partition;
use ndarray::Array3;
use rand::RngCore;
use std::collections::BTreeMap;
use std::path::Path;

/// Per-round artifacts and summary.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RoundState {
    pub round: usize,
    /// Mean pseudo-label confidence of this round's subset.
    pub m: f32,
    pub steps: u64,
    pub loss_first: f32,
    pub loss_last: f32,
    /// Checkpoint file name, relative to the arm directory.
    pub checkpoint: String,
    /// Pseudo-label table file name, relative to the arm directory.
    pub pseudo_table: String,
    pub config_hash: String,
}

/// Stage-2 settings. `total_iters` is the budget across all rounds; each
/// round gets an equal share, remainder to the last rounds.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelfTrainConfig {
    pub total_iters: u64,
    /// Per-stream batch size (one source batch plus one pseudo batch per step).
    pub batch_size: usize,
    pub max_lr: f32,
    pub weight_decay: f32,
    pub augment: AugmentPolicy,
    /// Augment source images too, not just pseudo-labeled ones.
    pub augment_source: bool,
    /// Train round `i` on all subsets up to `i` instead of subset `i` alone.
    /// Off by default: each round uses only its own subset's pseudo-labels.
    pub accumulate: bool,
}

impl Default for SelfTrainConfig {
    fn default() -> Self {
        SelfTrainConfig {
            total_iters: 2000,
            batch_size: 32,
            max_lr: 5e-4,
            weight_decay: 0.005,
            augment: AugmentPolicy::default(),
            augment_source: true,
            accumulate: false,
        }
    }
}

/// The adaptive mixed objective: `(1 - m) * mean(source) + m * mean(pseudo)`.
pub fn mixed_loss(source_losses: &[f64], pseudo_losses: &[f64], m: f64) -> f64 {
    assert!(
        !source_losses.is_empty() && !pseudo_losses.is_empty(),
        "mixed_loss needs non-empty batches"
    );
    debug_assert!((0.0..=1.0).contains(&m));
    let ms = source_losses.iter().sum::<f64>() / source_losses.len() as f64;
    let mp = pseudo_losses.iter().sum::<f64>() / pseudo_losses.len() as f64;
    (1.0 - m) * ms + m * mp
}

/// Iteration budget for each of `n` rounds: equal shares, remainder to the
/// last rounds.
pub fn round_budgets(total: u64, n: usize) -> Vec<u64> {
    let n64 = n as u64;
    let base = total / n64;
    let rem = (total % n64) as usize;
    (0..n)
        .map(|i| base + u64::from(i >= n - rem && rem > 0))
        .collect()
}

/// One self-training round: train from `model` on the labeled source set
/// plus one pseudo-labeled subset under the mixed objective. The RNG streams
/// are keyed by `(seed, round)` only.
#[allow(clippy::too_many_arguments)]
pub fn self_train_round(
    model: Recognizer,
    source: &[(String, Image, String)],
    pseudo: &[(String, Image, String)],
    m: f32,
    steps: u64,
    cfg: &SelfTrainConfig,
    seed: u64,
    round: usize,
) -> Result<(Recognizer, Vec<LossPoint>)> {
    if source.is_empty() || pseudo.is_empty() {
        return Err(Error::invalid("self_train_round needs non-empty sets"));
    }
    let cs = Charset::standard();
    let src_targets: Vec<[usize; SEQ_LEN]> = source
        .iter()
        .map(|(_, _, l)| cs.encode_label(l))
        .collect::<Result<_>>()?;
    let pseudo_targets: Vec<[usize; SEQ_LEN]> = pseudo
        .iter()
        .map(|(_, _, l)| cs.encode_label(l))
        .collect::<Result<_>>()?;

    let mut model = model;
    let mut opt = AdamW::new(cfg.weight_decay);
    let schedule = OneCycle::new(cfg.max_lr, steps);
    let mut src_sampler = sampler(
        source.len(),
        derive_rng(seed, &format!("selftrain-round-{round}-src")),
    );
    let mut psd_sampler = sampler(
        pseudo.len(),
        derive_rng(seed, &format!("selftrain-round-{round}-pseudo")),
    );
    let mut aug_rng = derive_rng(seed, &format!("selftrain-round-{round}-augment"));
    let mut curve = Vec::new();

    let bs = cfg.batch_size;
    for t in 0..steps {
        let si = src_sampler.next_batch(bs.min(source.len()));
        let pi = psd_sampler.next_batch(bs.min(pseudo.len()));
        let mut batch_imgs: Vec<Image> = Vec::with_capacity(si.len() + pi.len());
        for &i in &si {
            let img = &source[i].1;
            batch_imgs.push(if cfg.augment_source {
                augment(img, &cfg.augment, aug_rng.next_u64())
            } else {
                img.clone()
            });
        }
        for &i in &pi {
            batch_imgs.push(augment(&pseudo[i].1, &cfg.augment, aug_rng.next_u64()));
        }
        let refs: Vec<&Image> = batch_imgs.iter().collect();
        let x = Recognizer::batch_array(&refs)?;
        let (logits, cache) = model.forward_logits(&x);

        let n_src = si.len();
        let w_src = (1.0 - m) / n_src as f32;
        let w_psd = m / pi.len() as f32;
        let mut dlogits = Array3::zeros(logits.dim());
        let mut src_losses = Vec::with_capacity(n_src);
        let mut psd_losses = Vec::with_capacity(pi.len());
        for (b, _) in refs.iter().enumerate() {
            let target = if b < n_src {
                &src_targets[si[b]]
            } else {
                &pseudo_targets[pi[b - n_src]]
            };
            let lg = &logits;
            let row: Vec<f32> = (0..SEQ_LEN)
                .flat_map(|p| (0..NUM_CLASSES).map(move |c| lg[[b, p, c]]))
                .collect();
            let (l, g) = softmax_ce(&row, target);
            let w = if b < n_src { w_src } else { w_psd };
            if b < n_src {
                src_losses.push(l as f64);
            } else {
                psd_losses.push(l as f64);
            }
            for p in 0..SEQ_LEN {
                for c in 0..NUM_CLASSES {
                    dlogits[[b, p, c]] = g[p * NUM_CLASSES + c] * w;
                }
            }
        }
        let step_loss = mixed_loss(&src_losses, &psd_losses, m as f64) as f32;
        if !step_loss.is_finite() {
            return Err(Error::Training {
                step: t,
                detail: format!("non-finite mixed loss in round {round}"),
            });
        }
        model.zero_grads();
        model.backward(&cache, &dlogits);
        opt.step(&mut model, schedule.lr(t));
        if t % 25 == 0 || t + 1 == steps {
            curve.push(LossPoint {
                step: t,
                loss: step_loss,
                lr: schedule.lr(t),
            });
        }
    }
    model.step += steps;
    Ok((model, curve))
}

fn round_files(round: usize) -> (String, String, String) {
    (
        format!("round_{round:03}.json"),
        format!("round_{round:03}.ckpt"),
        format!("round_{round:03}_pseudo.tsv"),
    )
}

fn write_pseudo_table(path: &Path, table: &[(String, String, f32)]) -> Result<()> {
    let mut w = String::from("id\ttext\tconfidence\n");
    for (id, text, conf) in table {
        w.push_str(&format!("{id}\t{text}\t{conf}\n"));
    }
    std::fs::write(path, w).map_err(|e| Error::io(path, e))
}

/// Read a pseudo-label table back (id, text, confidence).
pub fn read_pseudo_table(path: &Path) -> Result<Vec<(String, String, f32)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::artifact(path, format!("bad pseudo line: {line:?}")));
        }
        out.push((
            cols[0].to_string(),
            cols[1].to_string(),
            cols[2]
                .parse()
                .map_err(|_| Error::artifact(path, "bad confidence"))?,
        ));
    }
    Ok(out)
}

/// Run all rounds of progressive self-training, persisting a checkpoint,
/// round record and pseudo-label table after each round under `out_dir`.
///
/// With `resume`, completed rounds (matching `config_hash`) are loaded from
/// disk instead of recomputed; a round record without its checkpoint is an
/// error.
#[allow(clippy::too_many_arguments)]
pub fn progressive_self_train(
    theta0: &Recognizer,
    source: &[(String, Image, String)],
    target: &BTreeMap<String, Image>,
    partition: &Partition,
    cfg: &SelfTrainConfig,
    seed: u64,
    out_dir: &Path,
    config_hash: &str,
    resume: bool,
) -> Result<Vec<RoundState>> {
    if partition.n == 0 || partition.subsets.is_empty() {
        return Err(Error::invalid("empty partition"));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let budgets = round_budgets(cfg.total_iters, partition.n);

    let mut states: Vec<RoundState> = Vec::with_capacity(partition.n);
    let mut model = theta0.clone();
    let mut accumulated: Vec<(String, Image, String)> = Vec::new();

    for (ri, subset_ids) in partition.subsets.iter().enumerate() {
        let round = ri + 1;
        let (json_name, ckpt_name, pseudo_name) = round_files(round);
        let json_path = out_dir.join(&json_name);
        let ckpt_path = out_dir.join(&ckpt_name);

        if resume && json_path.is_file() {
            let text = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
            let state: RoundState = serde_json::from_str(&text)?;
            if state.config_hash != config_hash {
                return Err(Error::artifact(
                    &json_path,
                    "round artifact was produced by a different config",
                ));
            }
            if !ckpt_path.is_file() {
                return Err(Error::io(
                    &ckpt_path,
                    std::io::Error::new(
                        std::io::ErrorKind::NotFound,
                        "checkpoint missing for completed round",
                    ),
                ));
            }
            load_checkpoint(&ckpt_path, &mut model, "recognizer")?;
            if cfg.accumulate {
                let table = read_pseudo_table(&out_dir.join(&pseudo_name))?;
                extend_accumulated(&mut accumulated, target, &table)?;
            }
            states.push(state);
            continue;
        }

        let subset: Vec<(String, Image)> = subset_ids
            .iter()
            .map(|id| {
                target
                    .get(id)
                    .map(|img| (id.clone(), img.clone()))
                    .ok_or_else(|| Error::invalid(format!("partition id {id} not in target set")))
            })
            .collect::<Result<_>>()?;

        let (table, m) = pseudo_label(&model, &subset)?;
        write_pseudo_table(&out_dir.join(&pseudo_name), &table)?;

        let mut round_set: Vec<(String, Image, String)> = subset
            .iter()
            .zip(&table)
            .map(|((id, img), (_, text, _))| (id.clone(), img.clone(), text.clone()))
            .collect();
        if cfg.accumulate {
            accumulated.extend(round_set.iter().cloned());
            round_set = accumulated.clone();
        }

        let steps = budgets[ri];
        let (next, curve) = if steps == 0 {
            (model.clone(), Vec::new())
        } else {
            self_train_round(model.clone(), source, &round_set, m, steps, cfg, seed, round)?
        };
        model = next;

        let step_count = model.step;
        save_checkpoint(&ckpt_path, &mut model, "recognizer", step_count, config_hash)?;
        let state = RoundState {
            round,
            m,
            steps,
            loss_first: curve.first().map(|p| p.loss).unwrap_or(0.0),
            loss_last: curve.last().map(|p| p.loss).unwrap_or(0.0),
            checkpoint: ckpt_name,
            pseudo_table: pseudo_name,
            config_hash: config_hash.to_string(),
        };
        let text = serde_json::to_string_pretty(&state)?;
        std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
        states.push(state);
    }
    Ok(states)
}

fn extend_accumulated(
    acc: &mut Vec<(String, Image, String)>,
    target: &BTreeMap<String, Image>,
    table: &[(String, String, f32)],
) -> Result<()> {
    for (id, text, _) in table {
        let img = target
            .get(id)
            .ok_or_else(|| Error::invalid(format!("pseudo table id {id} not in target set")))?;
        acc.push((id.clone(), img.clone(), text.clone()));
    }
    Ok(())
}

/// Load the model after the last completed round in `out_dir`, if any.
pub fn load_latest_round(
    out_dir: &Path,
    n: usize,
    config_hash: &str,
) -> Result<Option<(usize, Recognizer)>> {
    let mut latest = None;
    for round in (1..=n).rev() {
        let (json_name, ckpt_name, _) = round_files(round);
        let json_path = out_dir.join(json_name);
        if json_path.is_file() {
            let text = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
            let state: RoundState = serde_json::from_str(&text)?;
            if state.config_hash != config_hash {
                return Err(Error::artifact(&json_path, "config hash mismatch"));
            }
            let mut model = Recognizer::init(0);
            load_checkpoint(&out_dir.join(&ckpt_name), &mut model, "recognizer")?;
            latest = Some((round, model));
            break;
        }
    }
    Ok(latest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{perturb, render_word};
    use crate::nn::rng::derive_rng;
    use crate::stratifier::{rank_and_partition, ScoredSample};
    use rand::Rng;

    fn tiny_world() -> (
        Vec<(String, Image, String)>,
        BTreeMap<String, Image>,
        Partition,
    ) {
        let words = ["cat", "dog", "sun", "map"];
        let source: Vec<(String, Image, String)> = (0..8)
            .map(|i| {
                let w = words[i % words.len()];
                (
                    format!("s{i}"),
                    render_word(w, i % 2, i as u64).unwrap(),
                    w.to_string(),
                )
            })
            .collect();
        let mut rng = derive_rng(3, "st-test");
        let mut target = BTreeMap::new();
        let mut scored = Vec::new();
        for i in 0..6 {
            let id = format!("t{i}");
            let clean = render_word(words[(i + 1) % words.len()], i % 2, 40 + i as u64).unwrap();
            let sev = 0.1 + 0.13 * i as f32;
            target.insert(id.clone(), perturb(&clean, sev, i as u64).unwrap());
            scored.push(ScoredSample {
                id,
                score: (sev as f64).clamp(0.01, 0.99) + 1e-4 * rng.gen::<f64>(),
                provenance: None,
                estimator: "test".into(),
            });
        }
        let partition = rank_and_partition(&scored, 2).unwrap();
        (source, target, partition)
    }

    #[test]
    fn mixed_loss_formula() {
        assert_eq!(mixed_loss(&[1.0, 1.0], &[2.0], 0.0), 1.0);
        assert_eq!(mixed_loss(&[1.0], &[2.0, 2.0], 1.0), 2.0);
        let l = mixed_loss(&[1.0], &[2.0], 0.7);
        assert!((l - 1.7).abs() < 1e-12);
    }

    #[test]
    fn mixed_loss_linear_in_m() {
        let mut rng = derive_rng(61, "mixed-lin");
        for _ in 0..10 {
            let src: Vec<f64> = (0..5).map(|_| rng.gen::<f64>() * 3.0).collect();
            let psd: Vec<f64> = (0..7).map(|_| rng.gen::<f64>() * 3.0).collect();
            let m: f64 = rng.gen();
            let l0 = mixed_loss(&src, &psd, 0.0);
            let l1 = mixed_loss(&src, &psd, 1.0);
            let lm = mixed_loss(&src, &psd, m);
            assert!((lm - (l0 + m * (l1 - l0))).abs() < 1e-12);
        }
    }

    #[test]
    fn round_budgets_sum_to_total() {
        assert_eq!(round_budgets(2000, 5), vec![400, 400, 400, 400, 400]);
        assert_eq!(round_budgets(10, 3), vec![3, 3, 4]);
        assert_eq!(round_budgets(2, 3), vec![0, 1, 1]);
        assert_eq!(round_budgets(7, 1), vec![7]);
    }

    #[test]
    fn zero_budget_rounds_keep_model_and_compute_m() {
        let (source, target, partition) = tiny_world();
        let dir = tempfile::tempdir().unwrap();
        let cfg = SelfTrainConfig {
            total_iters: 0,
            batch_size: 4,
            ..SelfTrainConfig::default()
        };
        let theta0 = Recognizer::init(1);
        let states = progressive_self_train(
            &theta0,
            &source,
            &target,
            &partition,
            &cfg,
            9,
            dir.path(),
            "h0",
            false,
        )
        .unwrap();
        assert_eq!(states.len(), 2);
        for s in &states {
            assert!(s.m > 0.0 && s.m <= 1.0);
            assert_eq!(s.steps, 0);
        }
        // Final checkpoint equals theta0.
        let mut re = Recognizer::init(2);
        load_checkpoint(&dir.path().join(&states[1].checkpoint), &mut re, "recognizer").unwrap();
        let mut t0 = theta0.clone();
        for ((n1, d1), (n2, d2)) in t0.snapshot().iter().zip(&re.snapshot()) {
            assert_eq!(n1, n2);
            assert_eq!(d1, d2, "{n1} changed with zero iterations");
        }
    }

    #[test]
    fn n1_matches_directly_implemented_single_round() {
        let (source, target, _) = tiny_world();
        // Full target set as a single subset.
        let scored: Vec<ScoredSample> = target
            .keys()
            .enumerate()
            .map(|(i, id)| ScoredSample {
                id: id.clone(),
                score: 0.1 + 0.1 * i as f64,
                provenance: None,
                estimator: "test".into(),
            })
            .collect();
        let partition = rank_and_partition(&scored, 1).unwrap();
        let cfg = SelfTrainConfig {
            total_iters: 12,
            batch_size: 4,
            ..SelfTrainConfig::default()
        };
        let theta0 = Recognizer::init(5);
        let dir = tempfile::tempdir().unwrap();
        let states = progressive_self_train(
            &theta0,
            &source,
            &target,
            &partition,
            &cfg,
            11,
            dir.path(),
            "h1",
            false,
        )
        .unwrap();
        assert_eq!(states.len(), 1);
        let mut via_loop = Recognizer::init(0);
        load_checkpoint(
            &dir.path().join(&states[0].checkpoint),
            &mut via_loop,
            "recognizer",
        )
        .unwrap();

        // Direct single-round self-training: pseudo-label everything with
        // theta0, then one mixed round over the full set.
        let subset: Vec<(String, Image)> = partition.subsets[0]
            .iter()
            .map(|id| (id.clone(), target[id].clone()))
            .collect();
        let (table, m) = pseudo_label(&theta0, &subset).unwrap();
        let pseudo_set: Vec<(String, Image, String)> = subset
            .iter()
            .zip(&table)
            .map(|((id, img), (_, text, _))| (id.clone(), img.clone(), text.clone()))
            .collect();
        let (mut direct, _) =
            self_train_round(theta0.clone(), &source, &pseudo_set, m, 12, &cfg, 11, 1).unwrap();

        for ((n1, d1), (n2, d2)) in via_loop.snapshot().iter().zip(&direct.snapshot()) {
            assert_eq!(n1, n2);
            assert_eq!(d1, d2, "{n1} differs from direct single-round result");
        }
    }

    #[test]
    fn resume_matches_uninterrupted_run() {
        let (source, target, partition) = tiny_world();
        let cfg = SelfTrainConfig {
            total_iters: 8,
            batch_size: 4,
            ..SelfTrainConfig::default()
        };
        let theta0 = Recognizer::init(6);

        let full_dir = tempfile::tempdir().unwrap();
        let full = progressive_self_train(
            &theta0, &source, &target, &partition, &cfg, 13, full_dir.path(), "h2", false,
        )
        .unwrap();

        // Interrupted: run round 1 only (by truncating the partition), then
        // resume over the full partition in the same directory.
        let part_dir = tempfile::tempdir().unwrap();
        let mut first_only = partition.clone();
        first_only.subsets.truncate(1);
        first_only.stats.truncate(1);
        first_only.n = 1;
        progressive_self_train(
            &theta0,
            &source,
            &target,
            &first_only,
            &SelfTrainConfig {
                // Same per-round budget as the full run's round 1.
                total_iters: round_budgets(cfg.total_iters, partition.n)[0],
                ..cfg.clone()
            },
            13,
            part_dir.path(),
            "h2",
            false,
        )
        .unwrap();
        let resumed = progressive_self_train(
            &theta0, &source, &target, &partition, &cfg, 13, part_dir.path(), "h2", true,
        )
        .unwrap();

        assert_eq!(full.len(), resumed.len());
        for (a, b) in full.iter().zip(&resumed) {
            assert_eq!(a.m, b.m, "round {} m differs", a.round);
        }
        let mut m_full = Recognizer::init(0);
        load_checkpoint(
            &full_dir.path().join(&full.last().unwrap().checkpoint),
            &mut m_full,
            "recognizer",
        )
        .unwrap();
        let mut m_res = Recognizer::init(1);
        load_checkpoint(
            &part_dir.path().join(&resumed.last().unwrap().checkpoint),
            &mut m_res,
            "recognizer",
        )
        .unwrap();
        for ((n1, d1), (n2, d2)) in m_full.snapshot().iter().zip(&m_res.snapshot()) {
            assert_eq!(n1, n2);
            assert_eq!(d1, d2, "{n1} differs after resume");
        }
    }

    #[test]
    fn resume_with_missing_checkpoint_fails() {
        let (source, target, partition) = tiny_world();
        let cfg = SelfTrainConfig {
            total_iters: 4,
            batch_size: 4,
            ..SelfTrainConfig::default()
        };
        let theta0 = Recognizer::init(7);
        let dir = tempfile::tempdir().unwrap();
        progressive_self_train(
            &theta0, &source, &target, &partition, &cfg, 17, dir.path(), "h3", false,
        )
        .unwrap();
        std::fs::remove_file(dir.path().join("round_001.ckpt")).unwrap();
        let err = progressive_self_train(
            &theta0, &source, &target, &partition, &cfg, 17, dir.path(), "h3", true,
        );
        assert!(err.is_err());
    }
}
