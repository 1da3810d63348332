//! Spearman rank correlation between estimator scores and the hidden
//! generation severities (the desk-scale ordering ground truth).

use crate::corpus::SealedRecord;
use crate::error::{Error, Result};
use crate::stratifier::ScoredSample;
use std::collections::BTreeMap;

/// Average ranks (1-based), ties averaged.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite values"));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points");
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx.sqrt() * vy.sqrt())
}

/// Correlate estimator scores with hidden severities. Every scored id must
/// be present in the sealed metadata.
pub fn correlate_scores(
    scored: &[ScoredSample],
    sealed: &BTreeMap<String, SealedRecord>,
) -> Result<f64> {
    if scored.len() < 2 {
        return Err(Error::invalid("need at least two scored samples"));
    }
    let mut xs = Vec::with_capacity(scored.len());
    let mut ys = Vec::with_capacity(scored.len());
    for s in scored {
        let rec = sealed
            .get(&s.id)
            .ok_or_else(|| Error::invalid(format!("scored id {} missing from sealed metadata", s.id)))?;
        xs.push(s.score);
        ys.push(rec.severity as f64);
    }
    Ok(spearman(&xs, &ys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::rng::derive_rng;
    use rand::seq::SliceRandom;
    use rand::Rng;

    #[test]
    fn identical_orderings_give_one() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        assert!((spearman(&xs, &xs) - 1.0).abs() < 1e-12);
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect(); // monotone map
        assert!((spearman(&xs, &ys) - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((spearman(&xs, &neg) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_permutation_is_near_zero() {
        let mut rng = derive_rng(71, "spearman-perm");
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut ys = xs.clone();
        ys.shuffle(&mut rng);
        let rho = spearman(&xs, &ys);
        assert!(rho.abs() < 0.1, "independent ranks gave rho = {rho}");
    }

    #[test]
    fn ties_are_averaged() {
        let xs = [1.0, 1.0, 2.0, 2.0];
        let ys = [1.0, 2.0, 3.0, 4.0];
        let rho = spearman(&xs, &ys);
        assert!(rho > 0.0 && rho < 1.0);
    }

    #[test]
    fn correlate_checks_id_alignment() {
        let mut rng = derive_rng(72, "corr-ids");
        let mut sealed = BTreeMap::new();
        let mut scored = Vec::new();
        for i in 0..10 {
            let sev: f32 = rng.gen();
            sealed.insert(
                format!("t{i}"),
                SealedRecord {
                    severity: sev,
                    label: "x".into(),
                },
            );
            scored.push(ScoredSample {
                id: format!("t{i}"),
                score: sev as f64 * 0.5 + 0.1,
                provenance: None,
                estimator: "test".into(),
            });
        }
        let rho = correlate_scores(&scored, &sealed).unwrap();
        assert!((rho - 1.0).abs() < 1e-9);
        scored[0].id = "missing".into();
        assert!(correlate_scores(&scored, &sealed).is_err());
    }
}
