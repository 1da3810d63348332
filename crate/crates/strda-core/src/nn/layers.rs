use super::{ParamKind, ParamVisitor};
use ndarray::{Array1, Array2, Array3, Array4, Dimension};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// 2D convolution over `[B, C, H, W]` maps, implemented as im2col + GEMM.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub in_ch: usize,
    pub out_ch: usize,
    pub kh: usize,
    pub kw: usize,
    pub stride: usize,
    pub pad: usize,
    /// `[out_ch, in_ch*kh*kw]`
    pub w: Array2<f32>,
    pub b: Array1<f32>,
    pub gw: Array2<f32>,
    pub gb: Array1<f32>,
}

/// Forward cache: the im2col matrix per sample plus the input spatial shape.
pub struct Conv2dCache {
    cols: Array3<f32>, // [B, K, L]
    in_h: usize,
    in_w: usize,
}

impl Conv2d {
    /// He-normal initialization scaled by `gain` (use ~1.0 for ReLU stacks,
    /// a small value like 0.01 for output heads that should start near zero).
    pub fn new(
        in_ch: usize,
        out_ch: usize,
        k: usize,
        stride: usize,
        pad: usize,
        gain: f32,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let fan_in = (in_ch * k * k) as f32;
        let std = gain * (2.0 / fan_in).sqrt();
        let dist = Normal::new(0.0f32, std).unwrap();
        let w = Array2::from_shape_fn((out_ch, in_ch * k * k), |_| dist.sample(rng));
        Conv2d {
            in_ch,
            out_ch,
            kh: k,
            kw: k,
            stride,
            pad,
            w,
            b: Array1::zeros(out_ch),
            gw: Array2::zeros((out_ch, in_ch * k * k)),
            gb: Array1::zeros(out_ch),
        }
    }

    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.kh) / self.stride + 1,
            (w + 2 * self.pad - self.kw) / self.stride + 1,
        )
    }

    fn im2col(&self, x: &Array4<f32>, b: usize, cols: &mut Array3<f32>) {
        let (_, _, h, w) = x.dim();
        let (oh, ow) = self.out_hw(h, w);
        for c in 0..self.in_ch {
            for ky in 0..self.kh {
                for kx in 0..self.kw {
                    let row = (c * self.kh + ky) * self.kw + kx;
                    for oy in 0..oh {
                        let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                        for ox in 0..ow {
                            let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                            let v = if iy >= 0 && iy < h as isize && ix >= 0 && ix < w as isize {
                                x[[b, c, iy as usize, ix as usize]]
                            } else {
                                0.0
                            };
                            cols[[b, row, oy * ow + ox]] = v;
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&self, x: &Array4<f32>) -> (Array4<f32>, Conv2dCache) {
        let (bs, cin, h, w) = x.dim();
        assert_eq!(cin, self.in_ch, "conv input channel mismatch");
        let (oh, ow) = self.out_hw(h, w);
        let k = self.in_ch * self.kh * self.kw;
        let l = oh * ow;
        let mut cols = Array3::zeros((bs, k, l));
        let mut y = Array4::zeros((bs, self.out_ch, oh, ow));
        for b in 0..bs {
            self.im2col(x, b, &mut cols);
            let cols_b = cols.index_axis(ndarray::Axis(0), b);
            let yb = self.w.dot(&cols_b); // [out, L]
            for oc in 0..self.out_ch {
                let bias = self.b[oc];
                for oy in 0..oh {
                    for ox in 0..ow {
                        y[[b, oc, oy, ox]] = yb[[oc, oy * ow + ox]] + bias;
                    }
                }
            }
        }
        (
            y,
            Conv2dCache {
                cols,
                in_h: h,
                in_w: w,
            },
        )
    }

    /// Backward pass; accumulates into `gw`/`gb` and returns grad wrt input.
    pub fn backward(&mut self, cache: &Conv2dCache, dy: &Array4<f32>) -> Array4<f32> {
        let (bs, oc, oh, ow) = dy.dim();
        assert_eq!(oc, self.out_ch);
        let l = oh * ow;
        let (h, w) = (cache.in_h, cache.in_w);
        let mut dx = Array4::zeros((bs, self.in_ch, h, w));
        for b in 0..bs {
            let mut dyb = Array2::zeros((self.out_ch, l));
            for c in 0..self.out_ch {
                for oy in 0..oh {
                    for ox in 0..ow {
                        dyb[[c, oy * ow + ox]] = dy[[b, c, oy, ox]];
                    }
                }
            }
            let cols_b = cache.cols.index_axis(ndarray::Axis(0), b);
            self.gw = &self.gw + &dyb.dot(&cols_b.t());
            self.gb = &self.gb + &dyb.sum_axis(ndarray::Axis(1));
            let dcols = self.w.t().dot(&dyb); // [K, L]
            // col2im scatter-add
            for c in 0..self.in_ch {
                for ky in 0..self.kh {
                    for kx in 0..self.kw {
                        let row = (c * self.kh + ky) * self.kw + kx;
                        for oy in 0..oh {
                            let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            for ox in 0..ow {
                                let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                dx[[b, c, iy as usize, ix as usize]] += dcols[[row, oy * ow + ox]];
                            }
                        }
                    }
                }
            }
        }
        dx
    }

    pub fn visit_params(&mut self, prefix: &str, v: &mut dyn ParamVisitor) {
        v.visit(
            &format!("{prefix}.w"),
            ParamKind::Weight,
            self.w.as_slice_mut().unwrap(),
            self.gw.as_slice_mut().unwrap(),
        );
        v.visit(
            &format!("{prefix}.b"),
            ParamKind::Bias,
            self.b.as_slice_mut().unwrap(),
            self.gb.as_slice_mut().unwrap(),
        );
    }
}

/// Fully connected layer over `[B, F]` activations.
#[derive(Debug, Clone)]
pub struct Linear {
    pub in_f: usize,
    pub out_f: usize,
    /// `[out_f, in_f]`
    pub w: Array2<f32>,
    pub b: Array1<f32>,
    pub gw: Array2<f32>,
    pub gb: Array1<f32>,
}

impl Linear {
    pub fn new(in_f: usize, out_f: usize, gain: f32, rng: &mut ChaCha8Rng) -> Self {
        let std = gain * (2.0 / in_f as f32).sqrt();
        let dist = Normal::new(0.0f32, std).unwrap();
        let w = Array2::from_shape_fn((out_f, in_f), |_| dist.sample(rng));
        Linear {
            in_f,
            out_f,
            w,
            b: Array1::zeros(out_f),
            gw: Array2::zeros((out_f, in_f)),
            gb: Array1::zeros(out_f),
        }
    }

    pub fn forward(&self, x: &Array2<f32>) -> Array2<f32> {
        assert_eq!(x.dim().1, self.in_f, "linear input width mismatch");
        let mut y = x.dot(&self.w.t());
        for mut row in y.rows_mut() {
            row += &self.b;
        }
        y
    }

    /// `x` must be the forward input; accumulates into `gw`/`gb`.
    pub fn backward(&mut self, x: &Array2<f32>, dy: &Array2<f32>) -> Array2<f32> {
        self.gw = &self.gw + &dy.t().dot(x);
        self.gb = &self.gb + &dy.sum_axis(ndarray::Axis(0));
        dy.dot(&self.w)
    }

    pub fn visit_params(&mut self, prefix: &str, v: &mut dyn ParamVisitor) {
        v.visit(
            &format!("{prefix}.w"),
            ParamKind::Weight,
            self.w.as_slice_mut().unwrap(),
            self.gw.as_slice_mut().unwrap(),
        );
        v.visit(
            &format!("{prefix}.b"),
            ParamKind::Bias,
            self.b.as_slice_mut().unwrap(),
            self.gb.as_slice_mut().unwrap(),
        );
    }
}

/// 2x2 max pooling with stride 2; input height/width must be even.
#[derive(Debug, Clone, Default)]
pub struct MaxPool2;

pub struct MaxPool2Cache {
    /// For each output element, the flat input index that won.
    argmax: Vec<u32>,
    in_dim: (usize, usize, usize, usize),
}

impl MaxPool2 {
    pub fn forward(&self, x: &Array4<f32>) -> (Array4<f32>, MaxPool2Cache) {
        let (bs, c, h, w) = x.dim();
        assert!(h % 2 == 0 && w % 2 == 0, "maxpool2 needs even dims");
        let (oh, ow) = (h / 2, w / 2);
        let mut y = Array4::zeros((bs, c, oh, ow));
        let mut argmax = vec![0u32; bs * c * oh * ow];
        let xs = x.as_slice().unwrap();
        let mut oi = 0;
        for b in 0..bs {
            for ch in 0..c {
                let base = (b * c + ch) * h * w;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let i00 = base + (2 * oy) * w + 2 * ox;
                        let mut best_i = i00;
                        let mut best_v = xs[i00];
                        for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                            let i = base + (2 * oy + dy) * w + 2 * ox + dx;
                            if xs[i] > best_v {
                                best_v = xs[i];
                                best_i = i;
                            }
                        }
                        y[[b, ch, oy, ox]] = best_v;
                        argmax[oi] = best_i as u32;
                        oi += 1;
                    }
                }
            }
        }
        (
            y,
            MaxPool2Cache {
                argmax,
                in_dim: (bs, c, h, w),
            },
        )
    }

    pub fn backward(&self, cache: &MaxPool2Cache, dy: &Array4<f32>) -> Array4<f32> {
        let (bs, c, h, w) = cache.in_dim;
        let mut dx = Array4::zeros((bs, c, h, w));
        let dxs = dx.as_slice_mut().unwrap();
        for (oi, dyv) in dy.as_slice().unwrap().iter().enumerate() {
            dxs[cache.argmax[oi] as usize] += dyv;
        }
        dx
    }
}

/// Nearest-neighbor 2x upsampling.
#[derive(Debug, Clone, Default)]
pub struct Upsample2x;

impl Upsample2x {
    pub fn forward(&self, x: &Array4<f32>) -> Array4<f32> {
        let (bs, c, h, w) = x.dim();
        let mut y = Array4::zeros((bs, c, 2 * h, 2 * w));
        for b in 0..bs {
            for ch in 0..c {
                for yy in 0..h {
                    for xx in 0..w {
                        let v = x[[b, ch, yy, xx]];
                        y[[b, ch, 2 * yy, 2 * xx]] = v;
                        y[[b, ch, 2 * yy, 2 * xx + 1]] = v;
                        y[[b, ch, 2 * yy + 1, 2 * xx]] = v;
                        y[[b, ch, 2 * yy + 1, 2 * xx + 1]] = v;
                    }
                }
            }
        }
        y
    }

    pub fn backward(&self, dy: &Array4<f32>) -> Array4<f32> {
        let (bs, c, h2, w2) = dy.dim();
        let (h, w) = (h2 / 2, w2 / 2);
        let mut dx = Array4::zeros((bs, c, h, w));
        for b in 0..bs {
            for ch in 0..c {
                for yy in 0..h {
                    for xx in 0..w {
                        dx[[b, ch, yy, xx]] = dy[[b, ch, 2 * yy, 2 * xx]]
                            + dy[[b, ch, 2 * yy, 2 * xx + 1]]
                            + dy[[b, ch, 2 * yy + 1, 2 * xx]]
                            + dy[[b, ch, 2 * yy + 1, 2 * xx + 1]];
                    }
                }
            }
        }
        dx
    }
}

pub fn relu_fwd<D: Dimension>(x: &ndarray::Array<f32, D>) -> ndarray::Array<f32, D> {
    x.mapv(|v| v.max(0.0))
}

/// `y` is the forward output.
pub fn relu_bwd<D: Dimension>(
    y: &ndarray::Array<f32, D>,
    dy: &ndarray::Array<f32, D>,
) -> ndarray::Array<f32, D> {
    let mut dx = dy.clone();
    ndarray::Zip::from(&mut dx).and(y).for_each(|d, &yv| {
        if yv <= 0.0 {
            *d = 0.0;
        }
    });
    dx
}

pub fn leaky_relu_fwd<D: Dimension>(
    x: &ndarray::Array<f32, D>,
    alpha: f32,
) -> ndarray::Array<f32, D> {
    x.mapv(|v| if v >= 0.0 { v } else { alpha * v })
}

/// `x` is the forward input.
pub fn leaky_relu_bwd<D: Dimension>(
    x: &ndarray::Array<f32, D>,
    dy: &ndarray::Array<f32, D>,
    alpha: f32,
) -> ndarray::Array<f32, D> {
    let mut dx = dy.clone();
    ndarray::Zip::from(&mut dx).and(x).for_each(|d, &xv| {
        if xv < 0.0 {
            *d *= alpha;
        }
    });
    dx
}

pub fn sigmoid_fwd<D: Dimension>(x: &ndarray::Array<f32, D>) -> ndarray::Array<f32, D> {
    x.mapv(|v| 1.0 / (1.0 + (-v).exp()))
}

/// `y` is the forward output.
pub fn sigmoid_bwd<D: Dimension>(
    y: &ndarray::Array<f32, D>,
    dy: &ndarray::Array<f32, D>,
) -> ndarray::Array<f32, D> {
    let mut dx = dy.clone();
    ndarray::Zip::from(&mut dx)
        .and(y)
        .for_each(|d, &yv| *d *= yv * (1.0 - yv));
    dx
}
