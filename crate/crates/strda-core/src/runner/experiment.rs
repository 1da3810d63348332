//! End-to-end experiment orchestration for one or more seeds:
//! corpus -> baseline -> gap estimators -> stratification -> two
//! self-training arms (stratified and vanilla, equal step budgets) ->
//! per-round evaluation, with deterministic metrics and resumable stages.

use super::config::{EstimatorKind, ExperimentConfig};
use super::correlate::correlate_scores;
use super::eval::{auc, evaluate, pseudo_accuracy};
use super::metrics::{MetricsRecord, MetricsWriter};
use crate::corpus::{
    generate_corpus, load_corpus, load_eval, read_sealed, Domain, LoadedCorpus, LoadedEval,
    SealedRecord,
};
use crate::dd::{self, DdParams};
use crate::error::{Error, Result};
use crate::hdge::{self, ood_levels_batch, TranslationPair};
use crate::image::Image;
use crate::nn::rng::derive_seed;
use crate::nn::{load_checkpoint, save_checkpoint};
use crate::par;
use crate::recognizer::{pseudo_label, train_supervised, LossPoint, Recognizer};
use crate::selftrain::{progressive_self_train, read_pseudo_table, RoundState};
use crate::stratifier::{rank_and_partition, read_scores, write_scores, Partition, ScoredSample};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const HASH_STAMP: &str = "config_hash.txt";

/// Per-seed working directory and identity.
pub struct SeedContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub seed: u64,
    pub dir: PathBuf,
    pub config_hash: String,
    pub resume: bool,
}

/// Final numbers for one seed.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub baseline_source_acc: f64,
    pub baseline_target_acc: f64,
    pub strda_final_acc: f64,
    pub st_final_acc: f64,
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    pub config_hash: String,
    pub out_dir: PathBuf,
    pub seeds: Vec<SeedOutcome>,
}

impl<'a> SeedContext<'a> {
    /// Create or adopt the seed directory. An existing directory must match
    /// the config hash (resume) or be explicitly overwritten.
    pub fn prepare(
        cfg: &'a ExperimentConfig,
        seed: u64,
        resume: bool,
        overwrite: bool,
    ) -> Result<Self> {
        cfg.validate()?;
        let dir = cfg.run.out_dir.join(format!("seed_{seed}"));
        let config_hash = cfg.hash_hex();
        let stamp = dir.join(HASH_STAMP);
        if stamp.exists() {
            let existing = std::fs::read_to_string(&stamp)
                .map_err(|e| Error::io(&stamp, e))?
                .trim()
                .to_string();
            if overwrite {
                std::fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            } else if existing != config_hash {
                return Err(Error::artifact(
                    &stamp,
                    format!(
                        "directory was produced by config {existing}, current is {config_hash}; \
                         pass overwrite to discard it"
                    ),
                ));
            } else if !resume {
                return Err(Error::artifact(
                    &dir,
                    "run directory already exists; pass resume to continue or overwrite to redo",
                ));
            }
        } else if dir.exists() && !resume && !overwrite && dir.join("corpus").exists() {
            return Err(Error::artifact(&dir, "directory exists without a hash stamp"));
        }
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        std::fs::write(&stamp, format!("{config_hash}\n")).map_err(|e| Error::io(&stamp, e))?;
        Ok(SeedContext {
            cfg,
            seed,
            dir,
            config_hash,
            resume,
        })
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.dir.join("corpus")
    }

    /// Generate the corpus unless a manifest from this config already exists.
    pub fn ensure_corpus(&self) -> Result<()> {
        let manifest = self.corpus_dir().join(crate::corpus::generate::TRAIN_MANIFEST);
        if manifest.is_file() && self.resume {
            return Ok(());
        }
        let corpus_seed = derive_seed(self.seed, "corpus", 0);
        generate_corpus(&self.cfg.corpus, corpus_seed, &self.corpus_dir(), true)?;
        Ok(())
    }

    pub fn load_data(
        &self,
    ) -> Result<(LoadedCorpus, LoadedEval, BTreeMap<String, SealedRecord>)> {
        let cd = self.corpus_dir();
        let corpus = load_corpus(&cd.join(crate::corpus::generate::TRAIN_MANIFEST))?;
        let eval = load_eval(&cd.join(crate::corpus::generate::EVAL_MANIFEST))?;
        let sealed = read_sealed(&cd.join(crate::corpus::generate::SEALED_FILE))?;
        Ok((corpus, eval, sealed))
    }

    fn write_loss_curve(&self, name: &str, curve: &[LossPoint]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = String::from("step\tloss\tlr\n");
        for p in curve {
            w.push_str(&format!("{}\t{}\t{}\n", p.step, p.loss, p.lr));
        }
        std::fs::write(&path, w).map_err(|e| Error::io(&path, e))
    }

    /// Train the supervised baseline, or load it when resuming.
    pub fn ensure_baseline(&self, corpus: &LoadedCorpus) -> Result<Recognizer> {
        let path = self.dir.join("baseline.ckpt");
        if path.is_file() && self.resume {
            let mut model = Recognizer::init(0);
            let meta = load_checkpoint(&path, &mut model, "recognizer")?;
            if meta.config_hash != self.config_hash {
                return Err(Error::artifact(&path, "baseline from a different config"));
            }
            return Ok(model);
        }
        let init = Recognizer::init(derive_seed(self.seed, "baseline-init", 0));
        let (mut model, curve) =
            train_supervised(init, &corpus.source, &self.cfg.baseline, self.seed)?;
        self.write_loss_curve("baseline_losses.tsv", &curve)?;
        let step = model.step;
        save_checkpoint(&path, &mut model, "recognizer", step, &self.config_hash)?;
        Ok(model)
    }

    pub fn ensure_hdge(&self, corpus: &LoadedCorpus) -> Result<TranslationPair> {
        let path = self.dir.join("hdge.ckpt");
        if path.is_file() && self.resume {
            let mut pair = TranslationPair::init(0);
            let meta = load_checkpoint(&path, &mut pair, "hdge")?;
            if meta.config_hash != self.config_hash {
                return Err(Error::artifact(&path, "hdge pair from a different config"));
            }
            return Ok(pair);
        }
        let src: Vec<Image> = corpus.source.iter().map(|(_, img, _)| img.clone()).collect();
        let tgt: Vec<Image> = corpus.target.iter().map(|(_, img)| img.clone()).collect();
        let (mut pair, curve) = hdge::train_hdge(&src, &tgt, &self.cfg.estimator.hdge, self.seed)?;
        let gan_curve = self.dir.join("hdge_losses.tsv");
        let mut w = String::from("step\td_t\td_s\tg_t\tg_s\tcycle\n");
        for p in &curve {
            w.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                p.step, p.d_t, p.d_s, p.g_t, p.g_s, p.cycle
            ));
        }
        std::fs::write(&gan_curve, w).map_err(|e| Error::io(&gan_curve, e))?;
        let step = pair.step;
        save_checkpoint(&path, &mut pair, "hdge", step, &self.config_hash)?;
        Ok(pair)
    }

    pub fn ensure_dd(&self, corpus: &LoadedCorpus, baseline: &Recognizer) -> Result<DdParams> {
        let path = self.dir.join("dd.ckpt");
        if path.is_file() && self.resume {
            let mut params = DdParams::from_baseline(baseline, 0);
            let meta = load_checkpoint(&path, &mut params, "dd")?;
            if meta.config_hash != self.config_hash {
                return Err(Error::artifact(&path, "dd from a different config"));
            }
            return Ok(params);
        }
        let src: Vec<Image> = corpus.source.iter().map(|(_, img, _)| img.clone()).collect();
        let tgt: Vec<Image> = corpus.target.iter().map(|(_, img)| img.clone()).collect();
        let (mut params, curve) =
            dd::train_dd(&src, &tgt, baseline, &self.cfg.estimator.dd, self.seed)?;
        self.write_loss_curve("dd_losses.tsv", &curve)?;
        let step = params.step;
        save_checkpoint(&path, &mut params, "dd", step, &self.config_hash)?;
        Ok(params)
    }

    pub fn scores_path(&self, kind: EstimatorKind) -> PathBuf {
        self.dir.join(format!("scores_{kind}.tsv"))
    }

    pub fn partition_path(&self, kind: Option<EstimatorKind>) -> PathBuf {
        match kind {
            Some(k) => self.dir.join(format!("partition_{k}.json")),
            None => self.dir.join("partition.json"),
        }
    }
}

fn target_pairs(corpus: &LoadedCorpus) -> Vec<(String, Image)> {
    corpus.target.clone()
}

/// Run the full pipeline for one seed, writing metrics and artifacts under
/// `<out_dir>/seed_<seed>/`.
pub fn run_seed(
    cfg: &ExperimentConfig,
    seed: u64,
    resume: bool,
    overwrite: bool,
) -> Result<SeedOutcome> {
    let ctx = SeedContext::prepare(cfg, seed, resume, overwrite)?;
    let mut metrics = MetricsWriter::create(&ctx.dir)?;
    let hash = ctx.config_hash.clone();

    // Corpus.
    let t0 = Instant::now();
    ctx.ensure_corpus().map_err(|e| e.in_stage("corpus"))?;
    let (corpus, eval, sealed) = ctx.load_data().map_err(|e| e.in_stage("corpus"))?;
    metrics.timing("corpus", t0.elapsed().as_millis())?;

    // Baseline.
    let t0 = Instant::now();
    let theta0 = ctx
        .ensure_baseline(&corpus)
        .map_err(|e| e.in_stage("baseline"))?;
    let base_src_acc = evaluate(&theta0, &eval.source).map_err(|e| e.in_stage("baseline"))?;
    let base_tgt_acc = evaluate(&theta0, &eval.target).map_err(|e| e.in_stage("baseline"))?;
    metrics.append(
        MetricsRecord::new(&hash, seed, "baseline")
            .round(0)
            .value("word_acc_source", base_src_acc)
            .value("word_acc_target", base_tgt_acc),
    )?;
    metrics.timing("baseline", t0.elapsed().as_millis())?;

    // Estimators: train, score, and record their diagnostics.
    let want_hdge =
        cfg.estimator.train_all || cfg.estimator.kind == EstimatorKind::Hdge;
    let want_dd = cfg.estimator.train_all || cfg.estimator.kind == EstimatorKind::Dd;
    let eval_src_imgs: Vec<&Image> = eval.source.iter().map(|(_, img, _)| img).collect();
    let eval_tgt_imgs: Vec<&Image> = eval.target.iter().map(|(_, img, _)| img).collect();
    let mut scores_by_kind: BTreeMap<String, Vec<ScoredSample>> = BTreeMap::new();

    if want_hdge {
        let t0 = Instant::now();
        let pair = ctx.ensure_hdge(&corpus).map_err(|e| e.in_stage("hdge"))?;
        let scored = hdge::score_targets(&pair, &target_pairs(&corpus), cfg.estimator.hdge.beta)
            .map_err(|e| e.in_stage("hdge"))?;
        write_scores(
            &ctx.scores_path(EstimatorKind::Hdge),
            &scored,
            Some(cfg.estimator.hdge.beta),
        )?;
        // Discriminator separation on the held-out split. D_S should rank
        // real source above real target; D_T the reverse.
        let ood_src = ood_levels_batch(&pair, &eval_src_imgs).map_err(|e| e.in_stage("hdge"))?;
        let ood_tgt = ood_levels_batch(&pair, &eval_tgt_imgs).map_err(|e| e.in_stage("hdge"))?;
        let ds_src: Vec<f64> = ood_src.iter().map(|o| 1.0 - o.d_s).collect();
        let ds_tgt: Vec<f64> = ood_tgt.iter().map(|o| 1.0 - o.d_s).collect();
        let dt_src: Vec<f64> = ood_src.iter().map(|o| 1.0 - o.d_t).collect();
        let dt_tgt: Vec<f64> = ood_tgt.iter().map(|o| 1.0 - o.d_t).collect();
        let auc_d_s = auc(&ds_src, &ds_tgt);
        let auc_d_t = auc(&dt_tgt, &dt_src);
        let rho = correlate_scores(&scored, &sealed).map_err(|e| e.in_stage("hdge"))?;
        let d_s_mean: f64 = ood_tgt.iter().map(|o| o.d_s).sum::<f64>() / ood_tgt.len() as f64;
        let d_t_mean: f64 = ood_tgt.iter().map(|o| o.d_t).sum::<f64>() / ood_tgt.len() as f64;
        metrics.append(
            MetricsRecord::new(&hash, seed, "estimator_hdge")
                .value("auc_d_s", auc_d_s)
                .value("auc_d_t", auc_d_t)
                .value("spearman", rho)
                .value("d_s_mean_target", d_s_mean)
                .value("d_t_mean_target", d_t_mean),
        )?;
        metrics.timing("hdge", t0.elapsed().as_millis())?;
        scores_by_kind.insert("hdge".into(), scored);
    }
    if want_dd {
        let t0 = Instant::now();
        let params = ctx
            .ensure_dd(&corpus, &theta0)
            .map_err(|e| e.in_stage("dd"))?;
        let scored =
            dd::score_targets(&params, &target_pairs(&corpus)).map_err(|e| e.in_stage("dd"))?;
        write_scores(&ctx.scores_path(EstimatorKind::Dd), &scored, None)?;
        let s_src = dd::dd_score_batch(&params, &eval_src_imgs).map_err(|e| e.in_stage("dd"))?;
        let s_tgt = dd::dd_score_batch(&params, &eval_tgt_imgs).map_err(|e| e.in_stage("dd"))?;
        let auc_dd = auc(&s_tgt, &s_src);
        let rho = correlate_scores(&scored, &sealed).map_err(|e| e.in_stage("dd"))?;
        let src_below_half =
            s_src.iter().filter(|&&s| s < 0.5).count() as f64 / s_src.len() as f64;
        metrics.append(
            MetricsRecord::new(&hash, seed, "estimator_dd")
                .value("auc", auc_dd)
                .value("spearman", rho)
                .value("source_below_half_frac", src_below_half),
        )?;
        metrics.timing("dd", t0.elapsed().as_millis())?;
        scores_by_kind.insert("dd".into(), scored);
    }

    // Stratification.
    let t0 = Instant::now();
    let n = cfg.stratify.n;
    let mut partitions: BTreeMap<String, Partition> = BTreeMap::new();
    for (kind, scored) in &scores_by_kind {
        let p = rank_and_partition(scored, n).map_err(|e| e.in_stage("stratify"))?;
        p.write(&ctx.dir.join(format!("partition_{kind}.json")))?;
        partitions.insert(kind.clone(), p);
    }
    let chosen_kind = cfg.estimator.kind.to_string();
    let partition = partitions
        .get(&chosen_kind)
        .ok_or_else(|| Error::invalid("chosen estimator was not scored").in_stage("stratify"))?
        .clone();
    partition.write(&ctx.partition_path(None))?;
    let mut strat_rec = MetricsRecord::new(&hash, seed, "stratify").value("n", n as f64);
    if let (Some(a), Some(b)) = (partitions.get("hdge"), partitions.get("dd")) {
        let sa: std::collections::BTreeSet<&String> = a.subsets[0].iter().collect();
        let sb: std::collections::BTreeSet<&String> = b.subsets[0].iter().collect();
        let inter = sa.intersection(&sb).count() as f64;
        let denom = sa.len().max(1) as f64;
        strat_rec = strat_rec.value("subset1_overlap", inter / denom);
    }

    // Pseudo-label quality of the baseline on the easiest vs hardest subset.
    let target_map: BTreeMap<String, Image> = corpus.target.iter().cloned().collect();
    let subset_images = |ids: &[String]| -> Result<Vec<(String, Image)>> {
        ids.iter()
            .map(|id| {
                target_map
                    .get(id)
                    .map(|img| (id.clone(), img.clone()))
                    .ok_or_else(|| Error::invalid(format!("partition id {id} missing")))
            })
            .collect()
    };
    let t1 = subset_images(&partition.subsets[0]).map_err(|e| e.in_stage("stratify"))?;
    let tn = subset_images(partition.subsets.last().unwrap()).map_err(|e| e.in_stage("stratify"))?;
    let (table1, m1) = pseudo_label(&theta0, &t1).map_err(|e| e.in_stage("stratify"))?;
    let (tablen, mn) = pseudo_label(&theta0, &tn).map_err(|e| e.in_stage("stratify"))?;
    let acc1 = pseudo_accuracy(&table1, &sealed).map_err(|e| e.in_stage("stratify"))?;
    let accn = pseudo_accuracy(&tablen, &sealed).map_err(|e| e.in_stage("stratify"))?;
    metrics.append(
        strat_rec
            .value("pseudo_acc_t1", acc1)
            .value("pseudo_acc_tn", accn)
            .value("m_t1", m1 as f64)
            .value("m_tn", mn as f64),
    )?;
    metrics.timing("stratify", t0.elapsed().as_millis())?;

    // Self-training arms under one shared step budget.
    let chosen_scores = &scores_by_kind[&chosen_kind];
    let strda_final = run_arm(
        &ctx,
        &mut metrics,
        "strda",
        &partition,
        &corpus,
        &target_map,
        &eval,
        &sealed,
        &theta0,
    )?;
    let st_partition =
        rank_and_partition(chosen_scores, 1).map_err(|e| e.in_stage("st"))?;
    let st_final = run_arm(
        &ctx,
        &mut metrics,
        "st",
        &st_partition,
        &corpus,
        &target_map,
        &eval,
        &sealed,
        &theta0,
    )?;

    let outcome = SeedOutcome {
        seed,
        baseline_source_acc: base_src_acc,
        baseline_target_acc: base_tgt_acc,
        strda_final_acc: strda_final,
        st_final_acc: st_final,
    };
    let summary = ctx.dir.join("summary.txt");
    std::fs::write(
        &summary,
        format!(
            "seed\t{seed}\nconfig\t{hash}\nbaseline_source_acc\t{}\nbaseline_target_acc\t{}\nstrda_final_acc\t{}\nst_final_acc\t{}\n",
            outcome.baseline_source_acc,
            outcome.baseline_target_acc,
            outcome.strda_final_acc,
            outcome.st_final_acc,
        ),
    )
    .map_err(|e| Error::io(&summary, e))?;
    Ok(outcome)
}

/// One self-training arm: run the rounds, then evaluate every round
/// checkpoint. Returns the final round's target accuracy.
#[allow(clippy::too_many_arguments)]
fn run_arm(
    ctx: &SeedContext,
    metrics: &mut MetricsWriter,
    arm: &str,
    partition: &Partition,
    corpus: &LoadedCorpus,
    target_map: &BTreeMap<String, Image>,
    eval_sets: &LoadedEval,
    sealed: &BTreeMap<String, SealedRecord>,
    theta0: &Recognizer,
) -> Result<f64> {
    let t0 = Instant::now();
    let arm_dir = ctx.dir.join(arm);
    let states: Vec<RoundState> = progressive_self_train(
        theta0,
        &corpus.source,
        target_map,
        partition,
        &ctx.cfg.selftrain,
        ctx.seed,
        &arm_dir,
        &ctx.config_hash,
        ctx.resume,
    )
    .map_err(|e| e.in_stage(arm))?;

    let mut final_acc = 0.0;
    let mut total_steps = 0u64;
    for state in &states {
        let mut model = Recognizer::init(0);
        load_checkpoint(&arm_dir.join(&state.checkpoint), &mut model, "recognizer")
            .map_err(|e| e.in_stage(arm))?;
        let acc_t = evaluate(&model, &eval_sets.target).map_err(|e| e.in_stage(arm))?;
        let acc_s = evaluate(&model, &eval_sets.source).map_err(|e| e.in_stage(arm))?;
        let table = read_pseudo_table(&arm_dir.join(&state.pseudo_table))?;
        let p_acc = pseudo_accuracy(&table, sealed).map_err(|e| e.in_stage(arm))?;
        total_steps += state.steps;
        metrics.append(
            MetricsRecord::new(&ctx.config_hash, ctx.seed, "selftrain")
                .arm(arm)
                .round(state.round)
                .value("word_acc_target", acc_t)
                .value("word_acc_source", acc_s)
                .value("pseudo_acc", p_acc)
                .value("m", state.m as f64)
                .value("loss_last", state.loss_last as f64),
        )?;
        final_acc = acc_t;
    }
    metrics.append(
        MetricsRecord::new(&ctx.config_hash, ctx.seed, "budget")
            .arm(arm)
            .value("total_steps", total_steps as f64),
    )?;
    metrics.timing(arm, t0.elapsed().as_millis())?;
    Ok(final_acc)
}

/// Run every configured seed (in parallel when the feature allows) and write
/// the cross-seed summary table.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    resume: bool,
    overwrite: bool,
) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.run.out_dir).map_err(|e| Error::io(&cfg.run.out_dir, e))?;
    let resolved = cfg.run.out_dir.join("config.resolved.toml");
    std::fs::write(&resolved, cfg.to_toml_string()).map_err(|e| Error::io(&resolved, e))?;

    let seeds = cfg.run.seeds.clone();
    let results = par::map(&seeds, |&seed| run_seed(cfg, seed, resume, overwrite));
    let mut outcomes = Vec::with_capacity(seeds.len());
    for r in results {
        outcomes.push(r?);
    }

    let summary_path = cfg.run.out_dir.join("summary.tsv");
    let mut w = String::from(
        "seed\tbaseline_source_acc\tbaseline_target_acc\tstrda_final_acc\tst_final_acc\n",
    );
    for o in &outcomes {
        w.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            o.seed,
            o.baseline_source_acc,
            o.baseline_target_acc,
            o.strda_final_acc,
            o.st_final_acc
        ));
    }
    let mean = |f: fn(&SeedOutcome) -> f64| {
        outcomes.iter().map(f).sum::<f64>() / outcomes.len().max(1) as f64
    };
    w.push_str(&format!(
        "mean\t{}\t{}\t{}\t{}\n",
        mean(|o| o.baseline_source_acc),
        mean(|o| o.baseline_target_acc),
        mean(|o| o.strda_final_acc),
        mean(|o| o.st_final_acc)
    ));
    std::fs::write(&summary_path, w).map_err(|e| Error::io(&summary_path, e))?;

    Ok(ExperimentOutcome {
        config_hash: cfg.hash_hex(),
        out_dir: cfg.run.out_dir.clone(),
        seeds: outcomes,
    })
}

/// Re-score targets from persisted checkpoints (CLI `score` subcommand).
pub fn score_from_checkpoints(ctx: &SeedContext, kind: EstimatorKind) -> Result<Vec<ScoredSample>> {
    let (corpus, _, _) = ctx.load_data()?;
    match kind {
        EstimatorKind::Hdge => {
            let mut pair = TranslationPair::init(0);
            load_checkpoint(&ctx.dir.join("hdge.ckpt"), &mut pair, "hdge")?;
            let scored =
                hdge::score_targets(&pair, &target_pairs(&corpus), ctx.cfg.estimator.hdge.beta)?;
            write_scores(
                &ctx.scores_path(kind),
                &scored,
                Some(ctx.cfg.estimator.hdge.beta),
            )?;
            Ok(scored)
        }
        EstimatorKind::Dd => {
            let mut baseline = Recognizer::init(0);
            load_checkpoint(&ctx.dir.join("baseline.ckpt"), &mut baseline, "recognizer")?;
            let mut params = DdParams::from_baseline(&baseline, 0);
            load_checkpoint(&ctx.dir.join("dd.ckpt"), &mut params, "dd")?;
            let scored = dd::score_targets(&params, &target_pairs(&corpus))?;
            write_scores(&ctx.scores_path(kind), &scored, None)?;
            Ok(scored)
        }
    }
}

/// Build partitions from persisted score manifests (CLI `stratify`).
pub fn stratify_from_scores(ctx: &SeedContext) -> Result<Partition> {
    let chosen = ctx.cfg.estimator.kind;
    let scored = read_scores(&ctx.scores_path(chosen))?;
    let p = rank_and_partition(&scored, ctx.cfg.stratify.n)?;
    p.write(&ctx.partition_path(Some(chosen)))?;
    p.write(&ctx.partition_path(None))?;
    Ok(p)
}

/// Evaluate a persisted recognizer checkpoint on the held-out splits.
pub fn evaluate_checkpoint(ctx: &SeedContext, ckpt: &Path) -> Result<(f64, f64)> {
    let (_, eval, _) = ctx.load_data()?;
    let mut model = Recognizer::init(0);
    load_checkpoint(ckpt, &mut model, "recognizer")?;
    let src = evaluate(&model, &eval.source)?;
    let tgt = evaluate(&model, &eval.target)?;
    Ok((src, tgt))
}

/// Count labeled/unlabeled entries (used by CLI status lines).
pub fn corpus_counts(dir: &Path) -> Result<(usize, usize)> {
    let m = crate::corpus::CorpusManifest::read(&dir.join(crate::corpus::generate::TRAIN_MANIFEST))?;
    Ok((m.count(Domain::Source), m.count(Domain::Target)))
}

/// Run both self-training arms from persisted artifacts (CLI `self-train`).
pub fn selftrain_from_artifacts(ctx: &SeedContext, arm: &str) -> Result<Vec<RoundState>> {
    let (corpus, _, _) = ctx.load_data()?;
    let mut theta0 = Recognizer::init(0);
    load_checkpoint(&ctx.dir.join("baseline.ckpt"), &mut theta0, "recognizer")?;
    let target_map: BTreeMap<String, Image> = corpus.target.iter().cloned().collect();
    let partition = match arm {
        "strda" => Partition::read(&ctx.partition_path(None))?,
        "st" => {
            let scored = read_scores(&ctx.scores_path(ctx.cfg.estimator.kind))?;
            rank_and_partition(&scored, 1)?
        }
        other => return Err(Error::invalid(format!("unknown arm {other:?}"))),
    };
    progressive_self_train(
        &theta0,
        &corpus.source,
        &target_map,
        &partition,
        &ctx.cfg.selftrain,
        ctx.seed,
        &ctx.dir.join(arm),
        &ctx.config_hash,
        ctx.resume,
    )
}
