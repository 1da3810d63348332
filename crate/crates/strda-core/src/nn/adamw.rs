use super::{Model, ParamKind, ParamVisitor};

/// Adam with decoupled weight decay. Decay applies to weights only, never to
/// biases. State vectors are keyed by parameter visit order, which is fixed
/// per model.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub weight_decay: f32,
    t: u64,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
}

impl AdamW {
    pub fn new(weight_decay: f32) -> Self {
        AdamW {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// One update with learning rate `lr`, consuming the gradients currently
    /// accumulated in the model (does not zero them).
    pub fn step<M: Model>(&mut self, model: &mut M, lr: f32) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut vis = AdamVisitor {
            opt: self,
            lr,
            bc1,
            bc2,
            idx: 0,
        };
        model.visit_params(&mut vis);
    }
}

struct AdamVisitor<'a> {
    opt: &'a mut AdamW,
    lr: f32,
    bc1: f32,
    bc2: f32,
    idx: usize,
}

impl ParamVisitor for AdamVisitor<'_> {
    fn visit(&mut self, _name: &str, kind: ParamKind, p: &mut [f32], g: &mut [f32]) {
        if self.opt.m.len() <= self.idx {
            self.opt.m.push(vec![0.0; p.len()]);
            self.opt.v.push(vec![0.0; p.len()]);
        }
        let m = &mut self.opt.m[self.idx];
        let v = &mut self.opt.v[self.idx];
        assert_eq!(m.len(), p.len(), "optimizer state shape drift");
        let (b1, b2, eps) = (self.opt.beta1, self.opt.beta2, self.opt.eps);
        let wd = if kind == ParamKind::Weight {
            self.opt.weight_decay
        } else {
            0.0
        };
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let mhat = m[i] / self.bc1;
            let vhat = v[i] / self.bc2;
            p[i] -= self.lr * (mhat / (vhat.sqrt() + eps) + wd * p[i]);
        }
        self.idx += 1;
    }
}

/// One-cycle learning-rate schedule: linear warmup to `max_lr` over
/// `warmup_frac` of the run, then cosine decay down to `max_lr / final_div`.
#[derive(Debug, Clone)]
pub struct OneCycle {
    pub max_lr: f32,
    pub total_steps: u64,
    pub warmup_frac: f32,
    pub start_div: f32,
    pub final_div: f32,
}

impl OneCycle {
    pub fn new(max_lr: f32, total_steps: u64) -> Self {
        OneCycle {
            max_lr,
            total_steps: total_steps.max(1),
            warmup_frac: 0.3,
            start_div: 25.0,
            final_div: 1e4,
        }
    }

    /// Learning rate for 0-based step `t`.
    pub fn lr(&self, t: u64) -> f32 {
        let warm = ((self.total_steps as f32) * self.warmup_frac).max(1.0);
        let t = t.min(self.total_steps - 1) as f32;
        if t < warm {
            let lo = self.max_lr / self.start_div;
            lo + (self.max_lr - lo) * (t / warm)
        } else {
            let span = (self.total_steps as f32 - warm).max(1.0);
            let frac = (t - warm) / span;
            let lo = self.max_lr / self.final_div;
            lo + 0.5 * (self.max_lr - lo) * (1.0 + (std::f32::consts::PI * frac).cos())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::rng::derive_rng;
    use super::*;
    use crate::nn::{Linear, Model};
    use ndarray::Array2;

    struct Toy {
        lin: Linear,
    }

    impl Model for Toy {
        fn visit_params(&mut self, v: &mut dyn ParamVisitor) {
            self.lin.visit_params("lin", v);
        }
    }

    #[test]
    fn adamw_minimizes_quadratic() {
        let mut rng = derive_rng(3, "adam-test");
        let mut toy = Toy {
            lin: Linear::new(4, 1, 1.0, &mut rng),
        };
        let target = Array2::from_shape_fn((1, 4), |(_, j)| j as f32 * 0.5 - 0.7);
        let mut opt = AdamW::new(0.0);
        let x = Array2::from_elem((1, 4), 1.0);
        let mut first = None;
        let mut last = 0.0;
        for _ in 0..500 {
            toy.zero_grads();
            // loss = 0.5 * sum((w - target)^2); dy chosen accordingly
            let mut l = 0.0;
            for j in 0..4 {
                let d = toy.lin.w[[0, j]] - target[[0, j]];
                l += 0.5 * d * d;
                toy.lin.gw[[0, j]] = d;
            }
            let _ = x; // x unused; direct parameter objective
            if first.is_none() {
                first = Some(l);
            }
            last = l;
            opt.step(&mut toy, 0.05);
        }
        assert!(last < first.unwrap() * 1e-3, "AdamW failed to optimize");
    }

    #[test]
    fn one_cycle_shape() {
        let s = OneCycle::new(1e-3, 100);
        assert!(s.lr(0) < s.lr(29));
        let peak = (0..100).map(|t| s.lr(t)).fold(0.0f32, f32::max);
        assert!((peak - 1e-3).abs() < 1e-5);
        assert!(s.lr(99) < 1e-4);
        // Deterministic and total over the full range.
        assert_eq!(s.lr(150), s.lr(99));
    }

    #[test]
    fn weight_decay_skips_biases() {
        let mut rng = derive_rng(4, "wd-test");
        let mut toy = Toy {
            lin: Linear::new(2, 2, 1.0, &mut rng),
        };
        toy.lin.b[0] = 1.0;
        toy.lin.w[[0, 0]] = 1.0;
        toy.zero_grads();
        let mut opt = AdamW::new(0.1);
        opt.step(&mut toy, 0.01);
        // Zero grads: weights shrink by lr*wd*w, biases untouched.
        assert!((toy.lin.b[0] - 1.0).abs() < 1e-9);
        assert!((toy.lin.w[[0, 0]] - (1.0 - 0.01 * 0.1)).abs() < 1e-6);
    }
}
