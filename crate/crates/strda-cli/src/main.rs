//! `strda` command line: corpus generation, stage-by-stage training, full
//! experiment runs, hyper-parameter sweeps and reports.
//!
//! Stage subcommands (generate-data, train-baseline, ...) are incremental:
//! they reuse artifacts already present in the run directory and build any
//! missing prerequisites. `run` executes the whole pipeline and insists on a
//! clean directory unless --resume or --overwrite is given.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use strda_core::runner::{
    ablate, experiment, report, EstimatorKind, ExperimentConfig, SeedContext, SweepParam,
};

#[derive(Parser)]
#[command(name = "strda", version, about = "Stratified domain adaptation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (TOML). Built-in defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override the config's seed list (repeatable).
    #[arg(long = "seed")]
    seeds: Vec<u64>,

    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Continue from existing artifacts produced by the same config.
    #[arg(long)]
    resume: bool,

    /// Discard existing artifacts and start over.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the source/target corpus and evaluation splits.
    GenerateData(Common),
    /// Train the supervised baseline recognizer.
    TrainBaseline(Common),
    /// Train the translation-pair gap estimator.
    TrainHdge(Common),
    /// Train the focal-loss domain classifier.
    TrainDd(Common),
    /// Score target samples with a trained estimator.
    Score {
        #[command(flatten)]
        common: Common,
        /// hdge or dd (defaults to the configured estimator).
        #[arg(long)]
        estimator: Option<String>,
    },
    /// Sort scored targets and split them into subsets.
    Stratify(Common),
    /// Run progressive self-training over a partition.
    SelfTrain {
        #[command(flatten)]
        common: Common,
        /// strda (stratified rounds) or st (single round, full budget).
        #[arg(long, default_value = "strda")]
        arm: String,
    },
    /// Word accuracy of a recognizer checkpoint on the held-out splits.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Checkpoint path, relative to each seed directory or absolute.
        #[arg(long)]
        ckpt: PathBuf,
    },
    /// Full pipeline for every configured seed, both arms, plus summary.
    Run(Common),
    /// One full run per sweep value (n, beta, or gamma).
    Ablate {
        #[command(flatten)]
        common: Common,
        /// Parameter to sweep: n, beta, or gamma.
        #[arg(long)]
        param: String,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Summarize a run directory (text + charts).
    Report(Common),
}

fn load_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    if !common.seeds.is_empty() {
        cfg.run.seeds = common.seeds.clone();
    }
    if let Some(out) = &common.out {
        cfg.run.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Stage commands adopt existing directories; only `run` is strict.
fn stage_ctx<'a>(
    cfg: &'a ExperimentConfig,
    seed: u64,
    common: &Common,
) -> anyhow::Result<SeedContext<'a>> {
    Ok(SeedContext::prepare(cfg, seed, true, common.overwrite)?)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::GenerateData(common) => {
            let cfg = load_config(&common)?;
            for &seed in &cfg.run.seeds {
                let ctx = stage_ctx(&cfg, seed, &common)?;
                if common.overwrite {
                    let dir = ctx.corpus_dir();
                    if dir.exists() {
                        std::fs::remove_dir_all(&dir)?;
                    }
                }
                ctx.ensure_corpus()?;
                let (ns, nt) = experiment::corpus_counts(&ctx.corpus_dir())?;
                println!(
                    "seed {seed}: corpus at {} ({ns} source, {nt} target)",
                    ctx.corpus_dir().display()
                );
            }
        }
        Command::TrainBaseline(common) => {
            let cfg = load_config(&common)?;
            for &seed in &cfg.run.seeds {
                let ctx = stage_ctx(&cfg, seed, &common)?;
                ctx.ensure_corpus()?;
                let (corpus, eval, _) = ctx.load_data()?;
                let model = ctx.ensure_baseline(&corpus)?;
                let acc = strda_core::runner::evaluate(&model, &eval.source)?;
                println!("seed {seed}: baseline ready, clean source accuracy {acc:.4}");
            }
        }
        Command::TrainHdge(common) => {
            let cfg = load_config(&common)?;
            for &seed in &cfg.run.seeds {
                let ctx = stage_ctx(&cfg, seed, &common)?;
                ctx.ensure_corpus()?;
                let (corpus, _, _) = ctx.load_data()?;
                ctx.ensure_hdge(&corpus)?;
                println!("seed {seed}: hdge pair trained");
            }
        }
        Command::TrainDd(common) => {
            let cfg = load_config(&common)?;
            for &seed in &cfg.run.seeds {
                let ctx = stage_ctx(&cfg, seed, &common)?;
                ctx.ensure_corpus()?;
                let (corpus, _, _) = ctx.load_data()?;
                let baseline = ctx.ensure_baseline(&corpus)?;
                ctx.ensure_dd(&corpus, &baseline)?;
                println!("seed {seed}: domain discriminator trained");
            }
        }
        Command::Score { common, estimator } => {
            let cfg = load_config(&common)?;
            let kind = match estimator.as_deref() {
                None => cfg.estimator.kind,
                Some("hdge") => EstimatorKind::Hdge,
                Some("dd") => EstimatorKind::Dd,
                Some(other) => bail!("unknown estimator {other:?} (expected hdge or dd)"),
            };
            for &seed in &cfg.run.seeds {
                let ctx = stage_ctx(&cfg, seed, &common)?;
                let scored = experiment::score_from_checkpoints(&ctx, kind)?;
                println!(
                    "seed {seed}: {} targets scored with {kind} -> {}",
                    scored.len(),
                    ctx.scores_path(kind).display()
                );
            }
        }
        Command::Stratify(common) => {
            let cfg = load_config(&common)?;
            for &seed in &cfg.run.seeds {
                let ctx = stage_ctx(&cfg, seed, &common)?;
                let p = experiment::stratify_from_scores(&ctx)?;
                let sizes: Vec<usize> = p.subsets.iter().map(|s| s.len()).collect();
                println!(
                    "seed {seed}: partition n={} sizes {:?} -> {}",
                    p.n,
                    sizes,
                    ctx.partition_path(None).display()
                );
            }
        }
        Command::SelfTrain { common, arm } => {
            let cfg = load_config(&common)?;
            for &seed in &cfg.run.seeds {
                let ctx = stage_ctx(&cfg, seed, &common)?;
                let states = experiment::selftrain_from_artifacts(&ctx, &arm)?;
                for s in &states {
                    println!(
                        "seed {seed} {arm} round {}: m={:.4} steps={} ckpt={}",
                        s.round, s.m, s.steps, s.checkpoint
                    );
                }
            }
        }
        Command::Evaluate { common, ckpt } => {
            let cfg = load_config(&common)?;
            for &seed in &cfg.run.seeds {
                let ctx = stage_ctx(&cfg, seed, &common)?;
                let path = if ckpt.is_absolute() {
                    ckpt.clone()
                } else {
                    ctx.dir.join(&ckpt)
                };
                let (src, tgt) = experiment::evaluate_checkpoint(&ctx, &path)?;
                println!(
                    "seed {seed}: {} -> source accuracy {src:.4}, target accuracy {tgt:.4}",
                    path.display()
                );
            }
        }
        Command::Run(common) => {
            let cfg = load_config(&common)?;
            let outcome = experiment::run_experiment(&cfg, common.resume, common.overwrite)?;
            println!(
                "config {} -> {}",
                outcome.config_hash,
                outcome.out_dir.display()
            );
            for s in &outcome.seeds {
                println!(
                    "seed {}: baseline src {:.4} tgt {:.4} | strda {:.4} | st {:.4}",
                    s.seed,
                    s.baseline_source_acc,
                    s.baseline_target_acc,
                    s.strda_final_acc,
                    s.st_final_acc
                );
            }
        }
        Command::Ablate {
            common,
            param,
            values,
        } => {
            let cfg = load_config(&common)?;
            let param: SweepParam = param.parse()?;
            let points = ablate(&cfg, param, &values, common.resume, common.overwrite)?;
            for p in &points {
                println!(
                    "value {}: strda {:.4} | st {:.4} ({})",
                    p.value,
                    p.strda_mean_acc,
                    p.st_mean_acc,
                    p.out_dir.display()
                );
            }
        }
        Command::Report(common) => {
            let cfg = load_config(&common)?;
            let text = report(&cfg.run.out_dir)?;
            print!("{text}");
        }
    }
    Ok(())
}
