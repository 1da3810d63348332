//! Recognition loss: negative mean log-likelihood of the padded target
//! sequence under the per-position distributions.
//!
//! Generic over the float type: training runs in `f32`, while the
//! finite-difference gradient checks instantiate the same code at `f64`.

use crate::corpus::charset::{NUM_CLASSES, SEQ_LEN};
use num_traits::Float;

/// Floor for log arguments.
fn tiny<T: Float>() -> T {
    T::from(1e-38).unwrap()
}

/// Loss from per-position probabilities (`SEQ_LEN * NUM_CLASSES`, row-major).
/// Zero iff the distribution is a point mass on the target at every position.
pub fn sequence_nll<T: Float>(probs: &[T], targets: &[usize; SEQ_LEN]) -> T {
    debug_assert_eq!(probs.len(), SEQ_LEN * NUM_CLASSES);
    let mut acc = T::zero();
    for (i, &t) in targets.iter().enumerate() {
        let p = probs[i * NUM_CLASSES + t].max(tiny());
        acc = acc - p.ln();
    }
    acc / T::from(SEQ_LEN).unwrap()
}

/// Numerically stable per-position softmax over logits
/// (`SEQ_LEN * NUM_CLASSES`, row-major).
pub fn softmax_rows<T: Float>(logits: &[T]) -> Vec<T> {
    debug_assert_eq!(logits.len(), SEQ_LEN * NUM_CLASSES);
    let mut out = vec![T::zero(); logits.len()];
    for i in 0..SEQ_LEN {
        let row = &logits[i * NUM_CLASSES..(i + 1) * NUM_CLASSES];
        let mx = row.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
        let mut denom = T::zero();
        for (j, &l) in row.iter().enumerate() {
            let e = (l - mx).exp();
            out[i * NUM_CLASSES + j] = e;
            denom = denom + e;
        }
        for j in 0..NUM_CLASSES {
            out[i * NUM_CLASSES + j] = out[i * NUM_CLASSES + j] / denom;
        }
    }
    out
}

/// Fused softmax + sequence NLL from logits. Returns the loss and its
/// gradient with respect to the logits: `(softmax - onehot) / SEQ_LEN`.
pub fn softmax_ce<T: Float>(logits: &[T], targets: &[usize; SEQ_LEN]) -> (T, Vec<T>) {
    let probs = softmax_rows(logits);
    let loss = sequence_nll(&probs, targets);
    let inv_k = T::one() / T::from(SEQ_LEN).unwrap();
    let mut grad = probs;
    for (i, &t) in targets.iter().enumerate() {
        grad[i * NUM_CLASSES + t] = grad[i * NUM_CLASSES + t] - T::one();
    }
    for g in &mut grad {
        *g = *g * inv_k;
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::charset::{Charset, EOS, PAD};
    use crate::nn::rng::derive_rng;
    use rand::Rng;

    fn point_mass(targets: &[usize; SEQ_LEN]) -> Vec<f64> {
        let mut p = vec![0.0; SEQ_LEN * NUM_CLASSES];
        for (i, &t) in targets.iter().enumerate() {
            p[i * NUM_CLASSES + t] = 1.0;
        }
        p
    }

    #[test]
    fn point_mass_gives_zero() {
        let cs = Charset::standard();
        let t = cs.encode_label("cat").unwrap();
        let loss = sequence_nll(&point_mass(&t), &t);
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn uniform_gives_ln_38() {
        let cs = Charset::standard();
        let t = cs.encode_label("word").unwrap();
        let p = vec![1.0 / NUM_CLASSES as f64; SEQ_LEN * NUM_CLASSES];
        let loss = sequence_nll(&p, &t);
        assert!((loss - (NUM_CLASSES as f64).ln()).abs() < 1e-9);
        assert!((loss - 3.6376).abs() < 1e-3);
    }

    #[test]
    fn half_on_target_gives_ln_2() {
        let cs = Charset::standard();
        let t = cs.encode_label("abc12").unwrap();
        let mut p = vec![0.5 / (NUM_CLASSES as f64 - 1.0); SEQ_LEN * NUM_CLASSES];
        for (i, &ti) in t.iter().enumerate() {
            p[i * NUM_CLASSES + ti] = 0.5;
        }
        let loss = sequence_nll(&p, &t);
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn loss_nonnegative_and_zero_only_at_point_mass() {
        let mut rng = derive_rng(11, "nll-prop");
        let cs = Charset::standard();
        let t = cs.encode_label("xy9").unwrap();
        for _ in 0..200 {
            let mut p = vec![0.0f64; SEQ_LEN * NUM_CLASSES];
            for i in 0..SEQ_LEN {
                let mut row: Vec<f64> = (0..NUM_CLASSES).map(|_| rng.gen::<f64>() + 1e-9).collect();
                let s: f64 = row.iter().sum();
                for v in &mut row {
                    *v /= s;
                }
                p[i * NUM_CLASSES..(i + 1) * NUM_CLASSES].copy_from_slice(&row);
            }
            let loss = sequence_nll(&p, &t);
            assert!(loss > 0.0);
        }
        assert_eq!(sequence_nll(&point_mass(&t), &t), 0.0);
        let _ = (EOS, PAD);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = derive_rng(12, "ce-grad");
        let cs = Charset::standard();
        for word in ["a", "cat", "zebra8", "abcdefgh"] {
            let t = cs.encode_label(word).unwrap();
            let logits: Vec<f64> = (0..SEQ_LEN * NUM_CLASSES)
                .map(|_| rng.gen::<f64>() * 4.0 - 2.0)
                .collect();
            let (_, grad) = softmax_ce(&logits, &t);
            let h = 1e-6;
            for &idx in &[0usize, 37, 95, 170, 341] {
                let mut lp = logits.clone();
                lp[idx] += h;
                let (fp, _) = softmax_ce(&lp, &t);
                lp[idx] -= 2.0 * h;
                let (fm, _) = softmax_ce(&lp, &t);
                let fd = (fp - fm) / (2.0 * h);
                let an = grad[idx];
                let denom = an.abs().max(fd.abs()).max(1e-8);
                assert!(
                    ((fd - an) / denom).abs() < 1e-4,
                    "grad mismatch at {idx}: fd={fd} an={an}"
                );
            }
        }
    }
}
