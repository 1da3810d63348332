//! Orders target samples by estimated domain-gap score and splits them into
//! `n` subsets of (near-)equal size, the first subsets holding the smallest
//! scores. When sizes cannot be equal, the extra samples go to the last
//! subsets so the earliest, most-trusted rounds stay exactly balanced.

use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

/// One scored target sample, as emitted by either gap estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSample {
    pub id: String,
    /// Combined gap score in (0, 1); lower means closer to the source domain.
    pub score: f64,
    /// Per-domain OOD levels when the estimator provides them.
    pub provenance: Option<(f64, f64)>,
    pub estimator: String,
}

/// Per-subset summary statistics.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SubsetStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// The ordered sequence of target subsets produced by stage 1.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Partition {
    pub version: u32,
    pub n: usize,
    pub estimator: String,
    pub subsets: Vec<Vec<String>>,
    pub stats: Vec<SubsetStats>,
}

/// Sort ascending by `(score, id)` and split into `n` subsets whose sizes
/// differ by at most one, remainder assigned to the last subsets.
pub fn rank_and_partition(scored: &[ScoredSample], n: usize) -> Result<Partition> {
    if n == 0 {
        return Err(Error::invalid("partition count n must be >= 1"));
    }
    if n > scored.len() {
        return Err(Error::invalid(format!(
            "partition count n={n} exceeds sample count {}",
            scored.len()
        )));
    }
    let mut ids = BTreeSet::new();
    for s in scored {
        if !s.score.is_finite() || s.score <= 0.0 || s.score >= 1.0 {
            return Err(Error::invalid(format!(
                "score {} for {} outside (0, 1)",
                s.score, s.id
            )));
        }
        if !ids.insert(s.id.as_str()) {
            return Err(Error::invalid(format!("duplicate sample id {}", s.id)));
        }
    }
    let estimator = scored
        .first()
        .map(|s| s.estimator.clone())
        .unwrap_or_default();

    let mut order: Vec<&ScoredSample> = scored.iter().collect();
    order.sort_by(|a, b| {
        a.score
            .partial_cmp(&b.score)
            .expect("finite scores")
            .then_with(|| a.id.cmp(&b.id))
    });

    let total = order.len();
    let base = total / n;
    let rem = total % n;
    let mut subsets = Vec::with_capacity(n);
    let mut stats = Vec::with_capacity(n);
    let mut cursor = 0usize;
    for m in 0..n {
        // The last `rem` subsets take one extra sample.
        let size = base + usize::from(m >= n - rem && rem > 0);
        let chunk = &order[cursor..cursor + size];
        cursor += size;
        let scores: Vec<f64> = chunk.iter().map(|s| s.score).collect();
        let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = scores.iter().sum::<f64>() / scores.len().max(1) as f64;
        subsets.push(chunk.iter().map(|s| s.id.clone()).collect());
        stats.push(SubsetStats { min, mean, max });
    }
    debug_assert_eq!(cursor, total);
    Ok(Partition {
        version: 1,
        n,
        estimator,
        subsets,
        stats,
    })
}

impl Partition {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: Partition = serde_json::from_str(&text)?;
        if p.version != 1 {
            return Err(Error::artifact(
                path,
                format!("unsupported partition version {}", p.version),
            ));
        }
        Ok(p)
    }

    pub fn total_samples(&self) -> usize {
        self.subsets.iter().map(|s| s.len()).sum()
    }
}

/// Score-manifest file shared by both estimators: tab-separated with header
/// `id, d_s, d_t, d_i, estimator, beta`. Estimators without per-domain OOD
/// levels leave those columns empty.
pub fn write_scores(path: &Path, scored: &[ScoredSample], beta: Option<f64>) -> Result<()> {
    let mut w = String::from("id\td_s\td_t\td_i\testimator\tbeta\n");
    for s in scored {
        let (ds, dt) = match s.provenance {
            Some((a, b)) => (a.to_string(), b.to_string()),
            None => (String::new(), String::new()),
        };
        let beta_s = beta.map(|b| b.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            s.id, ds, dt, s.score, s.estimator, beta_s
        )
        .expect("string write");
    }
    std::fs::write(path, w).map_err(|e| Error::io(path, e))
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoredSample>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 6 {
            return Err(Error::artifact(path, format!("bad score line: {line:?}")));
        }
        let score: f64 = cols[3]
            .parse()
            .map_err(|_| Error::artifact(path, "bad d_i"))?;
        let provenance = if cols[1].is_empty() || cols[2].is_empty() {
            None
        } else {
            Some((
                cols[1]
                    .parse()
                    .map_err(|_| Error::artifact(path, "bad d_s"))?,
                cols[2]
                    .parse()
                    .map_err(|_| Error::artifact(path, "bad d_t"))?,
            ))
        };
        out.push(ScoredSample {
            id: cols[0].to_string(),
            score,
            provenance,
            estimator: cols[4].to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mk(id: &str, score: f64) -> ScoredSample {
        ScoredSample {
            id: id.to_string(),
            score,
            provenance: None,
            estimator: "test".to_string(),
        }
    }

    #[test]
    fn worked_example_three_subsets() {
        let scored = vec![
            mk("a", 0.9),
            mk("b", 0.1),
            mk("c", 0.5),
            mk("d", 0.3),
            mk("e", 0.7),
            mk("f", 0.2),
        ];
        let p = rank_and_partition(&scored, 3).unwrap();
        assert_eq!(
            p.subsets,
            vec![vec!["b", "f"], vec!["d", "c"], vec!["e", "a"]]
        );
    }

    #[test]
    fn n_one_gives_full_ascending_set() {
        let scored = vec![mk("a", 0.9), mk("b", 0.1), mk("c", 0.5)];
        let p = rank_and_partition(&scored, 1).unwrap();
        assert_eq!(p.subsets, vec![vec!["b", "c", "a"]]);
    }

    #[test]
    fn remainder_goes_to_last_subsets() {
        let scored: Vec<ScoredSample> = (0..7)
            .map(|i| mk(&format!("s{i}"), 0.1 + 0.1 * i as f64))
            .collect();
        let p = rank_and_partition(&scored, 3).unwrap();
        let sizes: Vec<usize> = p.subsets.iter().map(|s| s.len()).collect();
        assert_eq!(sizes, vec![2, 2, 3]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let scored = vec![mk("a", 0.5), mk("b", 0.6)];
        assert!(rank_and_partition(&scored, 3).is_err());
        assert!(rank_and_partition(&scored, 0).is_err());
        let dup = vec![mk("a", 0.5), mk("a", 0.6)];
        assert!(rank_and_partition(&dup, 1).is_err());
        let bad = vec![mk("a", 1.5)];
        assert!(rank_and_partition(&bad, 1).is_err());
    }

    #[test]
    fn partition_roundtrip_file() {
        let dir = tempfile::tempdir().unwrap();
        let scored: Vec<ScoredSample> = (0..10)
            .map(|i| mk(&format!("s{i}"), 0.05 + 0.09 * i as f64))
            .collect();
        let p = rank_and_partition(&scored, 4).unwrap();
        let path = dir.path().join("partition.json");
        p.write(&path).unwrap();
        let back = Partition::read(&path).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn score_manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let scored = vec![
            ScoredSample {
                id: "x".into(),
                score: 0.25,
                provenance: Some((0.2, 0.8)),
                estimator: "HDGE".into(),
            },
            ScoredSample {
                id: "y".into(),
                score: 0.75,
                provenance: Some((0.7, 0.9)),
                estimator: "HDGE".into(),
            },
        ];
        let path = dir.path().join("scores.tsv");
        write_scores(&path, &scored, Some(0.5)).unwrap();
        let back = read_scores(&path).unwrap();
        assert_eq!(scored, back);
    }

    proptest! {
        #[test]
        fn partition_invariants(
            scores in proptest::collection::vec(0.001f64..0.999, 1..120),
            n_raw in 1usize..12,
        ) {
            // Heavy ties: quantize scores, staying strictly inside (0, 1).
            let scored: Vec<ScoredSample> = scores
                .iter()
                .enumerate()
                .map(|(i, &s)| mk(&format!("id{i:03}"), (s * 8.0).floor() / 8.0 * 0.8 + 0.05))
                .collect();
            let n = n_raw.min(scored.len());
            let p = rank_and_partition(&scored, n).unwrap();

            // Conservation: multiset of ids preserved.
            let mut got: Vec<String> = p.subsets.iter().flatten().cloned().collect();
            got.sort();
            let mut want: Vec<String> = scored.iter().map(|s| s.id.clone()).collect();
            want.sort();
            prop_assert_eq!(got, want);

            // Size balance within 1, extras at the end.
            let sizes: Vec<usize> = p.subsets.iter().map(|s| s.len()).collect();
            let mn = *sizes.iter().min().unwrap();
            let mx = *sizes.iter().max().unwrap();
            prop_assert!(mx - mn <= 1);
            let first_big = sizes.iter().position(|&s| s == mx).unwrap();
            prop_assert!(sizes[first_big..].iter().all(|&s| s == mx));

            // Global ascending order by (score, id).
            let lookup: std::collections::HashMap<&str, f64> =
                scored.iter().map(|s| (s.id.as_str(), s.score)).collect();
            let flat: Vec<(f64, &String)> = p
                .subsets
                .iter()
                .flatten()
                .map(|id| (lookup[id.as_str()], id))
                .collect();
            for w in flat.windows(2) {
                prop_assert!(w[0].0 < w[1].0 || (w[0].0 == w[1].0 && w[0].1 < w[1].1));
            }

            // Monotone subset means.
            for w in p.stats.windows(2) {
                prop_assert!(w[0].mean <= w[1].mean + 1e-12);
            }
        }

        #[test]
        fn permutation_invariance(
            scores in proptest::collection::vec(0.001f64..0.999, 2..60),
            n_raw in 1usize..6,
            swap_seed in 0u64..1000,
        ) {
            let scored: Vec<ScoredSample> = scores
                .iter()
                .enumerate()
                .map(|(i, &s)| mk(&format!("id{i:03}"), (s * 4.0).floor() / 4.0 * 0.8 + 0.05))
                .collect();
            let n = n_raw.min(scored.len());
            let p1 = rank_and_partition(&scored, n).unwrap();
            let mut shuffled = scored.clone();
            // Cheap deterministic permutation.
            let len = shuffled.len();
            for i in 0..len {
                let j = ((swap_seed as usize).wrapping_mul(31).wrapping_add(i * 17)) % len;
                shuffled.swap(i, j);
            }
            let p2 = rank_and_partition(&shuffled, n).unwrap();
            prop_assert_eq!(p1, p2);
        }
    }
}
