//! Minimal CHW tensor with a same-shaped gradient accumulator.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TensorBuffer {
    dims: (usize, usize, usize),
    pub data: Vec<f64>,
    pub grad: Vec<f64>,
}

impl TensorBuffer {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self { dims: (c, h, w), data: vec![0.0; c * h * w], grad: vec![0.0; c * h * w] }
    }

    pub fn from_data(c: usize, h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != c * h * w {
            return Err(Error::InvalidConfig(format!(
                "tensor data length {} does not match {c}x{h}x{w}",
                data.len()
            )));
        }
        Ok(Self { dims: (c, h, w), grad: vec![0.0; data.len()], data })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    pub fn channels(&self) -> usize {
        self.dims.0
    }

    pub fn height(&self) -> usize {
        self.dims.1
    }

    pub fn width(&self) -> usize {
        self.dims.2
    }

    pub fn plane_len(&self) -> usize {
        self.dims.1 * self.dims.2
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn assert_finite(&self, what: &str) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite values in {what}")));
        }
        Ok(())
    }
}
