//! Human-readable run reports plus small static chart images (grayscale
//! PNG, drawn with the bundled bitmap font) and the matching data files.

use super::metrics::{read_metrics, MetricsRecord};
use crate::corpus::font;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::stratifier::read_scores;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const CHART_H: usize = 200;
const CHART_W: usize = 320;
const MARGIN: usize = 24;

fn draw_text(img: &mut Image, y0: usize, x0: usize, text: &str) {
    let mut cx = x0;
    for c in text.chars() {
        if let Some(glyph) = font::glyph_for_char(0, c) {
            for (ry, row) in glyph.iter().enumerate() {
                for gx in 0..font::GLYPH_W {
                    if row & (1 << (font::GLYPH_W - 1 - gx)) != 0 {
                        let (y, x) = (y0 + ry, cx + gx);
                        if y < img.h && x < img.w {
                            img.set(y, x, 0.0);
                        }
                    }
                }
            }
        }
        cx += font::GLYPH_W + 1;
        if cx + font::GLYPH_W >= img.w {
            break;
        }
    }
}

fn draw_segment(img: &mut Image, y0: f32, x0: f32, y1: f32, x1: f32, shade: f32) {
    let steps = ((y1 - y0).abs().max((x1 - x0).abs()).ceil() as usize).max(1);
    for s in 0..=steps {
        let t = s as f32 / steps as f32;
        let y = (y0 + (y1 - y0) * t).round() as isize;
        let x = (x0 + (x1 - x0) * t).round() as isize;
        if y >= 0 && (y as usize) < img.h && x >= 0 && (x as usize) < img.w {
            img.set(y as usize, x as usize, shade);
        }
    }
}

/// Render one or more named series over shared x values to a grayscale PNG.
pub fn render_line_chart(
    path: &Path,
    title: &str,
    xs: &[f64],
    series: &[(&str, Vec<f64>)],
) -> Result<()> {
    let mut img = Image::new(CHART_H, CHART_W, 1.0);
    // Axes.
    draw_segment(
        &mut img,
        (CHART_H - MARGIN) as f32,
        MARGIN as f32,
        (CHART_H - MARGIN) as f32,
        (CHART_W - 8) as f32,
        0.0,
    );
    draw_segment(
        &mut img,
        12.0,
        MARGIN as f32,
        (CHART_H - MARGIN) as f32,
        MARGIN as f32,
        0.0,
    );
    draw_text(&mut img, 2, MARGIN, title);

    let all: Vec<f64> = series.iter().flat_map(|(_, ys)| ys.iter().copied()).collect();
    if xs.len() < 2 || all.is_empty() {
        return img.save_png(path);
    }
    let (xmin, xmax) = (
        xs.iter().cloned().fold(f64::INFINITY, f64::min),
        xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (mut ymin, mut ymax) = (
        all.iter().cloned().fold(f64::INFINITY, f64::min),
        all.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    if (ymax - ymin).abs() < 1e-12 {
        ymin -= 0.5;
        ymax += 0.5;
    }
    let to_px = |x: f64, y: f64| -> (f32, f32) {
        let px = MARGIN as f64
            + (x - xmin) / (xmax - xmin).max(1e-12) * (CHART_W - MARGIN - 12) as f64;
        let py = (CHART_H - MARGIN) as f64
            - (y - ymin) / (ymax - ymin) * (CHART_H - MARGIN - 20) as f64;
        (py as f32, px as f32)
    };
    for (si, (name, ys)) in series.iter().enumerate() {
        let shade = 0.15 + 0.3 * si as f32;
        for w in xs.iter().zip(ys).collect::<Vec<_>>().windows(2) {
            let (x0, y0) = (*w[0].0, *w[0].1);
            let (x1, y1) = (*w[1].0, *w[1].1);
            let (py0, px0) = to_px(x0, y0);
            let (py1, px1) = to_px(x1, y1);
            draw_segment(&mut img, py0, px0, py1, px1, shade);
        }
        // Markers.
        for (x, y) in xs.iter().zip(ys) {
            let (py, px) = to_px(*x, *y);
            for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    let (yy, xx) = (py as i32 + dy, px as i32 + dx);
                    if yy >= 0 && (yy as usize) < img.h && xx >= 0 && (xx as usize) < img.w {
                        img.set(yy as usize, xx as usize, shade);
                    }
                }
            }
        }
        draw_text(
            &mut img,
            12 + 9 * si,
            CHART_W - 90,
            &format!("{name}"),
        );
    }
    // Y-range labels.
    draw_text(&mut img, CHART_H - MARGIN - 8, 1, &format!("{ymin:.2}"));
    draw_text(&mut img, 14, 1, &format!("{ymax:.2}"));
    img.save_png(path)
}

fn seed_dirs(run_dir: &Path) -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    if let Ok(entries) = std::fs::read_dir(run_dir) {
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("seed_"))
                && p.join("metrics.jsonl").is_file()
            {
                dirs.push(p);
            }
        }
    }
    dirs.sort();
    dirs
}

fn arm_curve(records: &[MetricsRecord], arm: &str) -> BTreeMap<usize, (f64, f64)> {
    // round -> (word_acc_target, m)
    let mut out = BTreeMap::new();
    for r in records {
        if r.stage == "selftrain" && r.arm.as_deref() == Some(arm) {
            if let (Some(round), Some(&acc)) = (r.round, r.values.get("word_acc_target")) {
                let m = r.values.get("m").copied().unwrap_or(f64::NAN);
                out.insert(round, (acc, m));
            }
        }
    }
    out
}

/// Summarize a run directory: per-seed and mean accuracies, round curves,
/// estimator diagnostics. Writes `report/report.txt`, chart PNGs and TSV
/// data files, and returns the text. A directory without runs yields an
/// explicit "no runs found" report.
pub fn report(run_dir: &Path) -> Result<String> {
    let dirs = seed_dirs(run_dir);
    let report_dir = run_dir.join("report");
    std::fs::create_dir_all(&report_dir).map_err(|e| Error::io(&report_dir, e))?;
    if dirs.is_empty() {
        let text = format!("no runs found under {}\n", run_dir.display());
        std::fs::write(report_dir.join("report.txt"), &text)
            .map_err(|e| Error::io(&report_dir.join("report.txt"), e))?;
        return Ok(text);
    }

    let mut text = String::new();
    writeln!(text, "run report: {}", run_dir.display()).unwrap();
    writeln!(text, "seeds: {}", dirs.len()).unwrap();
    writeln!(text).unwrap();
    writeln!(
        text,
        "{:<8} {:>14} {:>14} {:>12} {:>12}",
        "seed", "baseline_src", "baseline_tgt", "strda_final", "st_final"
    )
    .unwrap();

    // Per-round means across seeds: round 0 is the baseline.
    let mut strda_acc: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut st_acc: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut strda_m: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut finals = (Vec::new(), Vec::new());

    for dir in &dirs {
        let records = read_metrics(&dir.join("metrics.jsonl"))?;
        let seed = records.first().map(|r| r.seed).unwrap_or(0);
        let baseline = records.iter().find(|r| r.stage == "baseline");
        let (bs, bt) = baseline
            .map(|r| {
                (
                    r.values.get("word_acc_source").copied().unwrap_or(f64::NAN),
                    r.values.get("word_acc_target").copied().unwrap_or(f64::NAN),
                )
            })
            .unwrap_or((f64::NAN, f64::NAN));
        strda_acc.entry(0).or_default().push(bt);
        st_acc.entry(0).or_default().push(bt);
        let sc = arm_curve(&records, "strda");
        let vc = arm_curve(&records, "st");
        for (round, (acc, m)) in &sc {
            strda_acc.entry(*round).or_default().push(*acc);
            strda_m.entry(*round).or_default().push(*m);
        }
        for (round, (acc, _)) in &vc {
            st_acc.entry(*round).or_default().push(*acc);
        }
        let strda_final = sc.values().last().map(|(a, _)| *a).unwrap_or(f64::NAN);
        let st_final = vc.values().last().map(|(a, _)| *a).unwrap_or(f64::NAN);
        finals.0.push(strda_final);
        finals.1.push(st_final);
        writeln!(
            text,
            "{:<8} {:>14.4} {:>14.4} {:>12.4} {:>12.4}",
            seed, bs, bt, strda_final, st_final
        )
        .unwrap();

        for r in &records {
            if r.stage.starts_with("estimator_") {
                let vals: Vec<String> = r
                    .values
                    .iter()
                    .map(|(k, v)| format!("{k}={v:.4}"))
                    .collect();
                writeln!(text, "  seed {} {}: {}", seed, r.stage, vals.join(" ")).unwrap();
            }
            if r.stage == "stratify" {
                let vals: Vec<String> = r
                    .values
                    .iter()
                    .map(|(k, v)| format!("{k}={v:.4}"))
                    .collect();
                writeln!(text, "  seed {} stratify: {}", seed, vals.join(" ")).unwrap();
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    writeln!(text).unwrap();
    writeln!(
        text,
        "mean final: strda={:.4} st={:.4}",
        mean(&finals.0),
        mean(&finals.1)
    )
    .unwrap();

    // Accuracy-vs-round chart (mean across seeds), rounds 0..=n.
    let xs: Vec<f64> = strda_acc.keys().map(|&r| r as f64).collect();
    let strda_ys: Vec<f64> = strda_acc.values().map(|v| mean(v)).collect();
    let st_xs: Vec<f64> = st_acc.keys().map(|&r| r as f64).collect();
    let st_ys: Vec<f64> = st_acc.values().map(|v| mean(v)).collect();
    let mut tsv = String::from("round\tstrda_acc\tst_acc\n");
    for (i, x) in xs.iter().enumerate() {
        let st_val = st_xs
            .iter()
            .position(|v| v == x)
            .map(|j| st_ys[j])
            .unwrap_or(f64::NAN);
        writeln!(tsv, "{}\t{}\t{}", x, strda_ys[i], st_val).unwrap();
    }
    std::fs::write(report_dir.join("accuracy_vs_round.tsv"), &tsv)
        .map_err(|e| Error::io(&report_dir.join("accuracy_vs_round.tsv"), e))?;
    render_line_chart(
        &report_dir.join("accuracy_vs_round.png"),
        "accuracy by round",
        &xs,
        &[("strda", strda_ys.clone()), ("st", st_ys.clone())],
    )?;

    if !strda_m.is_empty() {
        let m_xs: Vec<f64> = strda_m.keys().map(|&r| r as f64).collect();
        let m_ys: Vec<f64> = strda_m.values().map(|v| mean(v)).collect();
        let mut tsv = String::from("round\tmean_confidence\n");
        for (x, y) in m_xs.iter().zip(&m_ys) {
            writeln!(tsv, "{x}\t{y}").unwrap();
        }
        std::fs::write(report_dir.join("confidence_vs_round.tsv"), &tsv)
            .map_err(|e| Error::io(&report_dir.join("confidence_vs_round.tsv"), e))?;
        render_line_chart(
            &report_dir.join("confidence_vs_round.png"),
            "mean confidence by round",
            &m_xs,
            &[("m", m_ys)],
        )?;
    }

    // Gap-score histogram over the first seed's score manifest, if present.
    for kind in ["hdge", "dd"] {
        let path = dirs[0].join(format!("scores_{kind}.tsv"));
        if path.is_file() {
            let scored = read_scores(&path)?;
            let bins = 20usize;
            let mut hist = vec![0f64; bins];
            for s in &scored {
                let b = ((s.score * bins as f64) as usize).min(bins - 1);
                hist[b] += 1.0;
            }
            let xs: Vec<f64> = (0..bins).map(|b| (b as f64 + 0.5) / bins as f64).collect();
            render_line_chart(
                &report_dir.join(format!("score_hist_{kind}.png")),
                &format!("{kind} score histogram"),
                &xs,
                &[("count", hist)],
            )?;
        }
    }

    std::fs::write(report_dir.join("report.txt"), &text)
        .map_err(|e| Error::io(&report_dir.join("report.txt"), e))?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_directory_reports_no_runs() {
        let dir = tempfile::tempdir().unwrap();
        let text = report(dir.path()).unwrap();
        assert!(text.contains("no runs found"));
        assert!(dir.path().join("report/report.txt").is_file());
    }

    #[test]
    fn chart_renderer_writes_png() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        render_line_chart(
            &path,
            "test chart",
            &[0.0, 1.0, 2.0, 3.0],
            &[("a", vec![0.1, 0.5, 0.4, 0.9]), ("b", vec![0.2, 0.2, 0.3, 0.5])],
        )
        .unwrap();
        let img = Image::load_png(&path).unwrap();
        assert_eq!((img.h, img.w), (CHART_H, CHART_W));
        // Something was drawn.
        assert!(img.pixels().iter().any(|&v| v < 0.5));
    }
}
