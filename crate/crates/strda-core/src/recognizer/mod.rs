//! The sequence recognizer: a small convolutional encoder with nine
//! per-position classifier heads over the charset plus EOS/PAD.
//!
//! Each head reads the feature-map columns under its character cell plus a
//! global context vector (the context is what lets a head distinguish the
//! terminal EOS slot from padding). The architecture is one concrete choice
//! behind the `forward` / `recognition_loss` / `decode` interface.

mod loss;
mod train;
pub mod trunk;

pub use loss::{sequence_nll, softmax_ce, softmax_rows};
pub use train::{sampler, train_supervised, EpochSampler, LossPoint, TrainConfig};
pub use trunk::{Trunk, TrunkCache};

use crate::corpus::charset::{Charset, EOS, NUM_CLASSES, PAD, SEQ_LEN};
use crate::error::{Error, Result};
use crate::image::{Image, CANVAS_H, CANVAS_W};
use crate::nn::rng::derive_rng;
use crate::nn::{Linear, Model, ParamVisitor};
use crate::par;
use ndarray::{Array2, Array3, Array4};
use trunk::{C2, FEAT_H, FEAT_W, G_FEATS};

const COLS_PER_POS: usize = 2;
const COL_FEATS: usize = C2 * FEAT_H * COLS_PER_POS;

/// Per-position categorical distributions over the charset plus EOS/PAD;
/// rows sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDistribution(pub Array2<f32>);

impl SequenceDistribution {
    pub fn positions(&self) -> usize {
        self.0.dim().0
    }

    pub fn classes(&self) -> usize {
        self.0.dim().1
    }
}

/// A decoded string with its confidence: the mean of per-position max
/// probabilities up to and including the terminal position.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub text: String,
    pub confidence: f32,
    pub max_probs: [f32; SEQ_LEN],
}

impl Prediction {
    /// True when decoding hit the terminal at the first position.
    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

/// Recognizer parameters: convolutional trunk, a character classifier with
/// weights shared across positions (reading each position's feature-map
/// columns), and one small per-position context head over the global vector
/// (what separates the terminal EOS slot from padding).
#[derive(Debug, Clone)]
pub struct Recognizer {
    pub trunk: Trunk,
    pub char_head: Linear,
    pub ctx_heads: Vec<Linear>,
    pub step: u64,
}

impl Model for Recognizer {
    fn visit_params(&mut self, v: &mut dyn ParamVisitor) {
        self.trunk.visit_params("", v);
        self.char_head.visit_params("char_head", v);
        for (i, h) in self.ctx_heads.iter_mut().enumerate() {
            h.visit_params(&format!("ctx_head{i}"), v);
        }
    }
}

pub struct ForwardCache {
    trunk: TrunkCache,
    col_ins: Vec<Array2<f32>>,
}

impl Recognizer {
    /// Fresh parameters. Heads start near zero so an untrained model emits
    /// near-uniform distributions.
    pub fn init(seed: u64) -> Self {
        let mut rng = derive_rng(seed, "recognizer-init");
        Recognizer {
            trunk: Trunk::init(&mut rng),
            char_head: Linear::new(COL_FEATS, NUM_CLASSES, 0.02, &mut rng),
            ctx_heads: (0..SEQ_LEN)
                .map(|_| Linear::new(G_FEATS, NUM_CLASSES, 0.02, &mut rng))
                .collect(),
            step: 0,
        }
    }

    /// Width slice of the feature map used by position `i`.
    fn col_range(i: usize) -> (usize, usize) {
        let x0 = (i * COLS_PER_POS).min(FEAT_W - COLS_PER_POS);
        (x0, x0 + COLS_PER_POS)
    }

    pub fn batch_array(images: &[&Image]) -> Result<Array4<f32>> {
        if images.is_empty() {
            return Err(Error::invalid("empty image batch"));
        }
        for img in images {
            if img.h != CANVAS_H || img.w != CANVAS_W {
                return Err(Error::invalid(format!(
                    "image dimensions {}x{} do not match canvas {CANVAS_H}x{CANVAS_W}",
                    img.h, img.w
                )));
            }
        }
        let mut x = Array4::zeros((images.len(), 1, CANVAS_H, CANVAS_W));
        for (b, img) in images.iter().enumerate() {
            for y in 0..CANVAS_H {
                for xx in 0..CANVAS_W {
                    x[[b, 0, y, xx]] = img.get(y, xx);
                }
            }
        }
        Ok(x)
    }

    /// Raw logits `[batch, SEQ_LEN, NUM_CLASSES]` plus the caches needed for
    /// a backward pass.
    pub fn forward_logits(&self, x: &Array4<f32>) -> (Array3<f32>, ForwardCache) {
        let bs = x.dim().0;
        let trunk = self.trunk.forward(x);
        let (p2, g) = (&trunk.p2, &trunk.g);

        let mut logits = Array3::zeros((bs, SEQ_LEN, NUM_CLASSES));
        let mut col_ins = Vec::with_capacity(SEQ_LEN);
        for i in 0..SEQ_LEN {
            let (x0, x1) = Self::col_range(i);
            let mut cols = Array2::zeros((bs, COL_FEATS));
            for b in 0..bs {
                let mut k = 0;
                for c in 0..C2 {
                    for y in 0..FEAT_H {
                        for xx in x0..x1 {
                            cols[[b, k]] = p2[[b, c, y, xx]];
                            k += 1;
                        }
                    }
                }
            }
            let char_logits = self.char_head.forward(&cols);
            let ctx_logits = self.ctx_heads[i].forward(g);
            for b in 0..bs {
                for cl in 0..NUM_CLASSES {
                    logits[[b, i, cl]] = char_logits[[b, cl]] + ctx_logits[[b, cl]];
                }
            }
            col_ins.push(cols);
        }
        (logits, ForwardCache { trunk, col_ins })
    }

    /// Backward from `dlogits`, accumulating parameter gradients.
    pub fn backward(&mut self, cache: &ForwardCache, dlogits: &Array3<f32>) {
        let bs = dlogits.dim().0;
        let mut dp2: Array4<f32> = Array4::zeros(cache.trunk.p2.dim());
        let mut dg: Array2<f32> = Array2::zeros((bs, G_FEATS));
        for i in 0..SEQ_LEN {
            let (x0, _) = Self::col_range(i);
            let mut dy = Array2::zeros((bs, NUM_CLASSES));
            for b in 0..bs {
                for cl in 0..NUM_CLASSES {
                    dy[[b, cl]] = dlogits[[b, i, cl]];
                }
            }
            let dcols = self.char_head.backward(&cache.col_ins[i], &dy);
            dg = dg + self.ctx_heads[i].backward(&cache.trunk.g, &dy);
            for b in 0..bs {
                let mut k = 0;
                for c in 0..C2 {
                    for y in 0..FEAT_H {
                        for dx in 0..COLS_PER_POS {
                            dp2[[b, c, y, x0 + dx]] += dcols[[b, k]];
                            k += 1;
                        }
                    }
                }
            }
        }
        self.trunk.backward(&cache.trunk, &dg, Some(&dp2));
    }

    /// Inference: per-position distributions for a batch of images.
    /// Deterministic; the batch is processed in parallel chunks whose
    /// results are concatenated in order.
    pub fn forward(&self, images: &[&Image]) -> Result<Vec<SequenceDistribution>> {
        if images.is_empty() {
            return Err(Error::invalid("empty image batch"));
        }
        let chunks: Vec<&[&Image]> = images.chunks(32).collect();
        let results = par::map(&chunks, |chunk| -> Result<Vec<SequenceDistribution>> {
            let x = Self::batch_array(chunk)?;
            let (logits, _) = self.forward_logits(&x);
            let bs = chunk.len();
            let mut out = Vec::with_capacity(bs);
            for b in 0..bs {
                let lg = &logits;
                let row: Vec<f32> = (0..SEQ_LEN)
                    .flat_map(|i| (0..NUM_CLASSES).map(move |c| lg[[b, i, c]]))
                    .collect();
                let probs = softmax_rows(&row);
                out.push(SequenceDistribution(
                    Array2::from_shape_vec((SEQ_LEN, NUM_CLASSES), probs).unwrap(),
                ));
            }
            Ok(out)
        });
        let mut all = Vec::with_capacity(images.len());
        for r in results {
            all.extend(r?);
        }
        Ok(all)
    }
}

/// Greedy argmax decoding: truncate at the first terminal (EOS or PAD);
/// PAD never appears in the text. Confidence is the mean of per-position
/// max probabilities up to and including the terminal.
pub fn decode(dist: &SequenceDistribution) -> Prediction {
    let cs = Charset::standard();
    let mut max_probs = [0.0f32; SEQ_LEN];
    let mut text = String::new();
    let mut consumed = 0usize;
    let mut terminated = false;
    for i in 0..SEQ_LEN {
        let row = dist.0.row(i);
        let (mut best_c, mut best_p) = (0usize, f32::NEG_INFINITY);
        for (c, &p) in row.iter().enumerate() {
            if p > best_p {
                best_p = p;
                best_c = c;
            }
        }
        max_probs[i] = best_p;
        if terminated {
            continue;
        }
        consumed = i + 1;
        if best_c == EOS || best_c == PAD {
            terminated = true;
        } else if text.chars().count() < SEQ_LEN - 1 {
            text.push(cs.char_at(best_c).expect("class < 36"));
        }
    }
    let confidence =
        max_probs[..consumed].iter().map(|&p| p as f64).sum::<f64>() / consumed as f64;
    Prediction {
        text,
        confidence: confidence as f32,
        max_probs,
    }
}

/// Pseudo-label an unlabeled subset: hard greedy decodes (label sharpening)
/// plus the arithmetic mean of per-sample confidences. Samples decoding to
/// the empty string keep an empty (EOS-only) label and still count toward
/// the mean.
pub fn pseudo_label(
    model: &Recognizer,
    subset: &[(String, Image)],
) -> Result<(Vec<(String, String, f32)>, f32)> {
    if subset.is_empty() {
        return Err(Error::invalid("empty pseudo-label subset"));
    }
    let images: Vec<&Image> = subset.iter().map(|(_, img)| img).collect();
    let dists = model.forward(&images)?;
    let mut table = Vec::with_capacity(subset.len());
    let mut acc = 0.0f64;
    for ((id, _), dist) in subset.iter().zip(&dists) {
        let pred = decode(dist);
        acc += pred.confidence as f64;
        table.push((id.clone(), pred.text, pred.confidence));
    }
    let m = (acc / subset.len() as f64) as f32;
    Ok((table, m))
}
