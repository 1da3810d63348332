//! Hyper-parameter sweeps: one full experiment per value over a shared
//! corpus spec and seed list, emitting a value-to-accuracy series.

use super::config::ExperimentConfig;
use super::experiment::{run_experiment, ExperimentOutcome};
use super::report::render_line_chart;
use crate::error::{Error, Result};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    N,
    Beta,
    Gamma,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(SweepParam::N),
            "beta" => Ok(SweepParam::Beta),
            "gamma" => Ok(SweepParam::Gamma),
            other => Err(Error::invalid(format!(
                "sweep parameter must be one of n, beta, gamma; got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub strda_mean_acc: f64,
    pub st_mean_acc: f64,
    pub out_dir: PathBuf,
}

/// Run the sweep. Each point gets its own output directory under
/// `<out_dir>/ablate_<param>/`.
pub fn ablate(
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
    resume: bool,
    overwrite: bool,
) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    let tag = match param {
        SweepParam::N => "n",
        SweepParam::Beta => "beta",
        SweepParam::Gamma => "gamma",
    };
    let mut points = Vec::with_capacity(values.len());
    for &v in values {
        let mut cfg = base.clone();
        match param {
            SweepParam::N => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::invalid(format!("n sweep value {v} is not a positive integer")));
                }
                cfg.stratify.n = v as usize;
            }
            SweepParam::Beta => {
                if !(0.0..1.0).contains(&v) {
                    return Err(Error::invalid(format!("beta sweep value {v} outside [0, 1)")));
                }
                cfg.estimator.hdge.beta = v;
            }
            SweepParam::Gamma => {
                if v < 0.0 {
                    return Err(Error::invalid(format!("gamma sweep value {v} is negative")));
                }
                cfg.estimator.dd.gamma = v;
            }
        }
        cfg.run.out_dir = base.run.out_dir.join(format!("ablate_{tag}")).join(format!("{v}"));
        cfg.validate()?;
        let outcome: ExperimentOutcome = run_experiment(&cfg, resume, overwrite)?;
        let n_seeds = outcome.seeds.len().max(1) as f64;
        points.push(SweepPoint {
            value: v,
            strda_mean_acc: outcome.seeds.iter().map(|s| s.strda_final_acc).sum::<f64>() / n_seeds,
            st_mean_acc: outcome.seeds.iter().map(|s| s.st_final_acc).sum::<f64>() / n_seeds,
            out_dir: outcome.out_dir,
        });
    }

    // Series table plus a small chart.
    let series_dir = base.run.out_dir.join(format!("ablate_{tag}"));
    std::fs::create_dir_all(&series_dir).map_err(|e| Error::io(&series_dir, e))?;
    let table = series_dir.join("series.tsv");
    let mut w = format!("{tag}\tstrda_mean_acc\tst_mean_acc\n");
    for p in &points {
        w.push_str(&format!("{}\t{}\t{}\n", p.value, p.strda_mean_acc, p.st_mean_acc));
    }
    std::fs::write(&table, w).map_err(|e| Error::io(&table, e))?;
    let chart = series_dir.join("series.png");
    let xs: Vec<f64> = points.iter().map(|p| p.value).collect();
    render_line_chart(
        &chart,
        &format!("final accuracy vs {tag}"),
        &xs,
        &[
            ("strda", points.iter().map(|p| p.strda_mean_acc).collect()),
            ("st", points.iter().map(|p| p.st_mean_acc).collect()),
        ],
    )?;
    Ok(points)
}
