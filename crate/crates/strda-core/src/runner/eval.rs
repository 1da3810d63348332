//! Evaluation metrics: exact-match word accuracy, rank AUC, pseudo-label
//! accuracy against sealed ground truth.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::recognizer::{decode, Recognizer};
use std::collections::BTreeMap;

/// Exact-match word accuracy of `model` on a labeled test set.
pub fn evaluate(model: &Recognizer, test: &[(String, Image, String)]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::invalid("evaluate needs a non-empty test set"));
    }
    let images: Vec<&Image> = test.iter().map(|(_, img, _)| img).collect();
    let dists = model.forward(&images)?;
    let correct = dists
        .iter()
        .zip(test)
        .filter(|(d, (_, _, label))| decode(d).text == *label)
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Rank-based AUC that `positives` score higher than `negatives`
/// (Mann-Whitney with average ranks for ties).
pub fn auc(positives: &[f64], negatives: &[f64]) -> f64 {
    assert!(!positives.is_empty() && !negatives.is_empty());
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));
    // Average ranks over tied groups.
    let n = all.len();
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for r in ranks.iter_mut().take(j + 1).skip(i) {
            *r = avg;
        }
        i = j + 1;
    }
    let pos_rank_sum: f64 = all
        .iter()
        .zip(&ranks)
        .filter(|((_, is_pos), _)| *is_pos)
        .map(|(_, &r)| r)
        .sum();
    let np = positives.len() as f64;
    let nn = negatives.len() as f64;
    (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

/// Fraction of pseudo-labels matching the sealed ground-truth labels.
/// Every id in the table must exist in the sealed map.
pub fn pseudo_accuracy(
    table: &[(String, String, f32)],
    sealed: &BTreeMap<String, crate::corpus::SealedRecord>,
) -> Result<f64> {
    if table.is_empty() {
        return Err(Error::invalid("empty pseudo-label table"));
    }
    let mut correct = 0usize;
    for (id, text, _) in table {
        let rec = sealed
            .get(id)
            .ok_or_else(|| Error::invalid(format!("id {id} missing from sealed metadata")))?;
        if *text == rec.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / table.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SealedRecord;

    #[test]
    fn auc_perfect_and_random() {
        let pos = [0.9, 0.8, 0.7];
        let neg = [0.1, 0.2, 0.3];
        assert_eq!(auc(&pos, &neg), 1.0);
        assert_eq!(auc(&neg, &pos), 0.0);
        let same = [0.5, 0.5];
        assert!((auc(&same, &same) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn auc_with_ties() {
        let pos = [0.5, 0.9];
        let neg = [0.5, 0.1];
        // Pairs: (0.5 vs 0.5) => 0.5; (0.5 vs 0.1) => 1; (0.9 vs 0.5) => 1; (0.9 vs 0.1) => 1.
        assert!((auc(&pos, &neg) - 3.5 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn pseudo_accuracy_counts_exact_matches() {
        let mut sealed = BTreeMap::new();
        sealed.insert(
            "a".to_string(),
            SealedRecord {
                severity: 0.5,
                label: "cat".into(),
            },
        );
        sealed.insert(
            "b".to_string(),
            SealedRecord {
                severity: 0.2,
                label: "dog".into(),
            },
        );
        let table = vec![
            ("a".to_string(), "cat".to_string(), 0.9f32),
            ("b".to_string(), "dig".to_string(), 0.6),
        ];
        assert_eq!(pseudo_accuracy(&table, &sealed).unwrap(), 0.5);
        let bad = vec![("zz".to_string(), "x".to_string(), 0.1f32)];
        assert!(pseudo_accuracy(&bad, &sealed).is_err());
    }

    #[test]
    fn evaluate_counts_exact_matches() {
        use crate::corpus::render_word;
        // An untrained model decodes nothing correctly on real words.
        let model = Recognizer::init(1);
        let test: Vec<(String, Image, String)> = vec![
            ("a".into(), render_word("cat", 0, 1).unwrap(), "cat".into()),
            ("b".into(), render_word("dog", 0, 2).unwrap(), "dog".into()),
            ("c".into(), render_word("sun", 0, 3).unwrap(), "sun".into()),
            ("d".into(), render_word("map", 0, 4).unwrap(), "map".into()),
        ];
        let acc = evaluate(&model, &test).unwrap();
        assert!((0.0..=1.0).contains(&acc));
        let empty: Vec<(String, Image, String)> = vec![];
        assert!(evaluate(&model, &empty).is_err());
    }
}
