//! Convolution, ReLU, nearest upsampling and channel concatenation with
//! their backward passes. Plain f64 loops, single-threaded by design: the
//! training contract is bit-reproducibility for a fixed seed.

use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use super::tensor::TensorBuffer;

/// 2D convolution (square kernel, zero padding).
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub in_c: usize,
    pub out_c: usize,
    pub ksize: usize,
    pub stride: usize,
    pub pad: usize,
    /// [out_c][in_c][k][k], row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub weight_grad: Vec<f64>,
    pub bias_grad: Vec<f64>,
}

impl ConvLayer {
    /// Gaussian fan-in initialization (variance 2 / fan_in), biases zero.
    pub fn new(
        in_c: usize,
        out_c: usize,
        ksize: usize,
        stride: usize,
        pad: usize,
        rng: &mut ChaCha12Rng,
    ) -> Self {
        let n = out_c * in_c * ksize * ksize;
        let std = (2.0 / (in_c * ksize * ksize) as f64).sqrt();
        let gauss = Normal::new(0.0, std).expect("positive std");
        let weight = (0..n).map(|_| gauss.sample(rng)).collect();
        Self {
            in_c,
            out_c,
            ksize,
            stride,
            pad,
            weight,
            bias: vec![0.0; out_c],
            weight_grad: vec![0.0; n],
            bias_grad: vec![0.0; out_c],
        }
    }

    pub fn out_dims(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.pad - self.ksize) / self.stride + 1,
            (w + 2 * self.pad - self.ksize) / self.stride + 1,
        )
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn zero_grad(&mut self) {
        self.weight_grad.fill(0.0);
        self.bias_grad.fill(0.0);
    }

    pub fn forward(&self, x: &TensorBuffer) -> TensorBuffer {
        debug_assert_eq!(x.channels(), self.in_c);
        let (h, w) = (x.height(), x.width());
        let (oh, ow) = self.out_dims(h, w);
        let mut out = TensorBuffer::zeros(self.out_c, oh, ow);
        let k = self.ksize;
        for oc in 0..self.out_c {
            let out_plane = &mut out.data[oc * oh * ow..(oc + 1) * oh * ow];
            out_plane.fill(self.bias[oc]);
            for ic in 0..self.in_c {
                let in_plane = &x.data[ic * h * w..(ic + 1) * h * w];
                let wbase = ((oc * self.in_c) + ic) * k * k;
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = self.weight[wbase + ky * k + kx];
                        if wv == 0.0 {
                            continue;
                        }
                        for oy in 0..oh {
                            let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let in_row = &in_plane[iy as usize * w..(iy as usize + 1) * w];
                            let out_row = &mut out_plane[oy * ow..(oy + 1) * ow];
                            for ox in 0..ow {
                                let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                out_row[ox] += wv * in_row[ix as usize];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Accumulates weight/bias gradients and adds the input gradient into
    /// `x.grad`. `grad_out` reads from `out.grad`.
    pub fn backward(&mut self, x: &mut TensorBuffer, out: &TensorBuffer) {
        let (h, w) = (x.height(), x.width());
        let (oh, ow) = (out.height(), out.width());
        let k = self.ksize;
        for oc in 0..self.out_c {
            let gout_plane = &out.grad[oc * oh * ow..(oc + 1) * oh * ow];
            self.bias_grad[oc] += gout_plane.iter().sum::<f64>();
            for ic in 0..self.in_c {
                let wbase = ((oc * self.in_c) + ic) * k * k;
                let in_base = ic * h * w;
                for ky in 0..k {
                    for kx in 0..k {
                        let wv = self.weight[wbase + ky * k + kx];
                        let mut wg = 0.0;
                        for oy in 0..oh {
                            let iy = (oy * self.stride + ky) as isize - self.pad as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let row = in_base + iy as usize * w;
                            let gout_row = &gout_plane[oy * ow..(oy + 1) * ow];
                            for ox in 0..ow {
                                let ix = (ox * self.stride + kx) as isize - self.pad as isize;
                                if ix < 0 || ix >= w as isize {
                                    continue;
                                }
                                let g = gout_row[ox];
                                wg += x.data[row + ix as usize] * g;
                                x.grad[row + ix as usize] += wv * g;
                            }
                        }
                        self.weight_grad[wbase + ky * k + kx] += wg;
                    }
                }
            }
        }
    }
}

/// ReLU (identity when disabled, for the linearity probe).
pub fn relu_forward(x: &TensorBuffer, enabled: bool) -> TensorBuffer {
    let mut out = x.clone();
    out.zero_grad();
    if enabled {
        for v in &mut out.data {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    out
}

/// Routes `out.grad` into `x.grad` through the activation mask.
pub fn relu_backward(x: &mut TensorBuffer, out: &TensorBuffer, enabled: bool) {
    for i in 0..x.grad.len() {
        if !enabled || out.data[i] > 0.0 {
            x.grad[i] += out.grad[i];
        }
    }
}

/// Nearest-neighbor 2x upsampling.
pub fn upsample2_forward(x: &TensorBuffer) -> TensorBuffer {
    let (c, h, w) = x.dims();
    let mut out = TensorBuffer::zeros(c, 2 * h, 2 * w);
    for cc in 0..c {
        for y in 0..2 * h {
            for xx in 0..2 * w {
                out.data[(cc * 2 * h + y) * 2 * w + xx] = x.data[(cc * h + y / 2) * w + xx / 2];
            }
        }
    }
    out
}

pub fn upsample2_backward(x: &mut TensorBuffer, out: &TensorBuffer) {
    let (c, h, w) = x.dims();
    for cc in 0..c {
        for y in 0..2 * h {
            for xx in 0..2 * w {
                x.grad[(cc * h + y / 2) * w + xx / 2] += out.grad[(cc * 2 * h + y) * 2 * w + xx];
            }
        }
    }
}

/// Channel concatenation of same-sized tensors.
pub fn concat_forward(parts: &[&TensorBuffer]) -> TensorBuffer {
    let (_, h, w) = parts[0].dims();
    let total_c: usize = parts.iter().map(|p| p.channels()).sum();
    let mut out = TensorBuffer::zeros(total_c, h, w);
    let mut off = 0;
    for p in parts {
        debug_assert_eq!((p.height(), p.width()), (h, w));
        out.data[off..off + p.data.len()].copy_from_slice(&p.data);
        off += p.data.len();
    }
    out
}

pub fn concat_backward(parts: &mut [&mut TensorBuffer], out: &TensorBuffer) {
    let mut off = 0;
    for p in parts.iter_mut() {
        let n = p.data.len();
        for i in 0..n {
            p.grad[i] += out.grad[off + i];
        }
        off += n;
    }
}
