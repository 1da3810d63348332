//! Adversarial objectives for the translation pairs.
//!
//! The discriminator objective is the printed cross-entropy form: `log D` on
//! real samples and `log(1 - D)` on translated ones, batch-mean per term.
//! Generators oppose it through the non-saturating form `-log D(fake)`.
//! A least-squares variant is available as a stability fallback. Everything
//! is generic over the float type so gradient checks can run in `f64`.

use num_traits::Float;

fn clamp01<T: Float>(p: T) -> T {
    let lo = T::from(1e-12).unwrap();
    let hi = T::one() - lo;
    p.max(lo).min(hi)
}

/// Discriminator loss from its outputs in `(0, 1)`:
/// `-mean log D(real) - mean log(1 - D(fake))`.
/// Returns the loss and its gradients wrt each output.
pub fn disc_loss_from_outputs<T: Float>(d_real: &[T], d_fake: &[T]) -> (T, Vec<T>, Vec<T>) {
    assert!(!d_real.is_empty() && !d_fake.is_empty());
    let nr = T::from(d_real.len()).unwrap();
    let nf = T::from(d_fake.len()).unwrap();
    let mut loss = T::zero();
    let mut gr = Vec::with_capacity(d_real.len());
    for &d in d_real {
        let d = clamp01(d);
        loss = loss - d.ln() / nr;
        gr.push(-(T::one() / d) / nr);
    }
    let mut gf = Vec::with_capacity(d_fake.len());
    for &d in d_fake {
        let d = clamp01(d);
        loss = loss - (T::one() - d).ln() / nf;
        gf.push((T::one() / (T::one() - d)) / nf);
    }
    (loss, gr, gf)
}

/// Non-saturating generator loss from discriminator outputs on translated
/// samples: `-mean log D(fake)`.
pub fn gen_loss_from_outputs<T: Float>(d_fake: &[T]) -> (T, Vec<T>) {
    assert!(!d_fake.is_empty());
    let n = T::from(d_fake.len()).unwrap();
    let mut loss = T::zero();
    let mut g = Vec::with_capacity(d_fake.len());
    for &d in d_fake {
        let d = clamp01(d);
        loss = loss - d.ln() / n;
        g.push(-(T::one() / d) / n);
    }
    (loss, g)
}

/// Same objectives expressed on raw logits (fused with the sigmoid) for
/// numerical stability during training. Gradients are wrt the logits.
pub fn disc_loss_from_logits(l_real: &[f32], l_fake: &[f32]) -> (f32, Vec<f32>, Vec<f32>) {
    let nr = l_real.len() as f32;
    let nf = l_fake.len() as f32;
    let mut loss = 0.0f32;
    // -ln sigmoid(l) = softplus(-l); -ln(1 - sigmoid(l)) = softplus(l)
    let softplus = |x: f32| {
        if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        }
    };
    let sigmoid = |x: f32| 1.0 / (1.0 + (-x).exp());
    let mut gr = Vec::with_capacity(l_real.len());
    for &l in l_real {
        loss += softplus(-l) / nr;
        gr.push(-(1.0 - sigmoid(l)) / nr);
    }
    let mut gf = Vec::with_capacity(l_fake.len());
    for &l in l_fake {
        loss += softplus(l) / nf;
        gf.push(sigmoid(l) / nf);
    }
    (loss, gr, gf)
}

pub fn gen_loss_from_logits(l_fake: &[f32]) -> (f32, Vec<f32>) {
    let n = l_fake.len() as f32;
    let softplus = |x: f32| {
        if x > 0.0 {
            x + (-x).exp().ln_1p()
        } else {
            x.exp().ln_1p()
        }
    };
    let sigmoid = |x: f32| 1.0 / (1.0 + (-x).exp());
    let mut loss = 0.0f32;
    let mut g = Vec::with_capacity(l_fake.len());
    for &l in l_fake {
        loss += softplus(-l) / n;
        g.push(-(1.0 - sigmoid(l)) / n);
    }
    (loss, g)
}

/// Least-squares fallback on raw logits: real -> 1, fake -> 0 for the
/// discriminator; fake -> 1 for the generator.
pub fn disc_loss_least_squares(l_real: &[f32], l_fake: &[f32]) -> (f32, Vec<f32>, Vec<f32>) {
    let nr = l_real.len() as f32;
    let nf = l_fake.len() as f32;
    let mut loss = 0.0;
    let mut gr = Vec::with_capacity(l_real.len());
    for &l in l_real {
        loss += 0.5 * (l - 1.0).powi(2) / nr;
        gr.push((l - 1.0) / nr);
    }
    let mut gf = Vec::with_capacity(l_fake.len());
    for &l in l_fake {
        loss += 0.5 * l * l / nf;
        gf.push(l / nf);
    }
    (loss, gr, gf)
}

pub fn gen_loss_least_squares(l_fake: &[f32]) -> (f32, Vec<f32>) {
    let n = l_fake.len() as f32;
    let mut loss = 0.0;
    let mut g = Vec::with_capacity(l_fake.len());
    for &l in l_fake {
        loss += 0.5 * (l - 1.0).powi(2) / n;
        g.push((l - 1.0) / n);
    }
    (loss, g)
}

/// Mean absolute reconstruction error and its gradient wrt `recon`.
pub fn cycle_l1(recon: &[f32], original: &[f32]) -> (f32, Vec<f32>) {
    assert_eq!(recon.len(), original.len());
    let n = recon.len() as f32;
    let mut loss = 0.0f32;
    let mut g = Vec::with_capacity(recon.len());
    for (&r, &o) in recon.iter().zip(original) {
        let d = r - o;
        loss += d.abs() / n;
        // Subgradient 0 at exact equality (f32 signum(0.0) would give 1.0).
        let s = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        g.push(s / n);
    }
    (loss, g)
}
