//! Minimal CNN building blocks: layers with explicit forward/backward,
//! decoupled-weight-decay Adam, and a one-cycle learning-rate schedule.
//!
//! Feature maps are `Array4<f32>` in `[batch, channel, height, width]`
//! order, flat activations are `Array2<f32>` in `[batch, feature]` order.
//! Layers own their parameters and gradient buffers; backward passes
//! accumulate into the gradient buffers so a caller can combine several
//! weighted loss terms before one optimizer step. All math runs in a fixed
//! order, so results are bit-reproducible for a given seed.

mod adamw;
pub mod checkpoint;
mod layers;
pub mod rng;

pub use adamw::{AdamW, OneCycle};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use layers::{
    leaky_relu_bwd, leaky_relu_fwd, relu_bwd, relu_fwd, sigmoid_bwd, sigmoid_fwd, Conv2d,
    Conv2dCache, Linear, MaxPool2, MaxPool2Cache, Upsample2x,
};

/// Distinguishes weights (subject to weight decay) from biases (not).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
}

/// Visitor over a model's named parameter/gradient pairs.
///
/// Visit order is fixed by the model definition; the optimizer, the
/// checkpoint writer and the gradient-check helpers all rely on it.
pub trait ParamVisitor {
    fn visit(&mut self, name: &str, kind: ParamKind, param: &mut [f32], grad: &mut [f32]);
}

/// Anything that exposes its parameters to a [`ParamVisitor`].
pub trait Model {
    fn visit_params(&mut self, visitor: &mut dyn ParamVisitor);

    fn zero_grads(&mut self) {
        struct Zero;
        impl ParamVisitor for Zero {
            fn visit(&mut self, _n: &str, _k: ParamKind, _p: &mut [f32], g: &mut [f32]) {
                g.fill(0.0);
            }
        }
        self.visit_params(&mut Zero);
    }

    fn param_count(&mut self) -> usize {
        struct Count(usize);
        impl ParamVisitor for Count {
            fn visit(&mut self, _n: &str, _k: ParamKind, p: &mut [f32], _g: &mut [f32]) {
                self.0 += p.len();
            }
        }
        let mut c = Count(0);
        self.visit_params(&mut c);
        c.0
    }

    /// True if any parameter is non-finite.
    fn has_non_finite(&mut self) -> bool {
        struct Check(bool);
        impl ParamVisitor for Check {
            fn visit(&mut self, _n: &str, _k: ParamKind, p: &mut [f32], _g: &mut [f32]) {
                if !self.0 {
                    self.0 = p.iter().any(|v| !v.is_finite());
                }
            }
        }
        let mut c = Check(false);
        self.visit_params(&mut c);
        c.0
    }

    /// Named tensors as `(name, data)` snapshots, in visit order.
    fn snapshot(&mut self) -> Vec<(String, Vec<f32>)> {
        struct Snap(Vec<(String, Vec<f32>)>);
        impl ParamVisitor for Snap {
            fn visit(&mut self, n: &str, _k: ParamKind, p: &mut [f32], _g: &mut [f32]) {
                self.0.push((n.to_string(), p.to_vec()));
            }
        }
        let mut s = Snap(Vec::new());
        self.visit_params(&mut s);
        s.0
    }

    /// Restore parameters from `snapshot` output; panics on name/shape mismatch.
    fn restore(&mut self, tensors: &[(String, Vec<f32>)]) {
        struct Restore<'a> {
            tensors: &'a [(String, Vec<f32>)],
            idx: usize,
        }
        impl ParamVisitor for Restore<'_> {
            fn visit(&mut self, n: &str, _k: ParamKind, p: &mut [f32], _g: &mut [f32]) {
                let (name, data) = &self.tensors[self.idx];
                assert_eq!(name, n, "tensor order mismatch on restore");
                assert_eq!(data.len(), p.len(), "tensor shape mismatch on restore");
                p.copy_from_slice(data);
                self.idx += 1;
            }
        }
        let mut r = Restore { tensors, idx: 0 };
        self.visit_params(&mut r);
        assert_eq!(r.idx, tensors.len(), "tensor count mismatch on restore");
    }
}
