//! Real linear convolution through complex FFTs.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Convolution against a fixed kernel, with the kernel transform cached.
pub(crate) struct FixedKernel {
    max_input: usize,
    out_len: usize,
    kernel_hat: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FixedKernel {
    pub(crate) fn new(kernel: &[f64], max_input: usize) -> Self {
        let out_len = kernel.len() + max_input - 1;
        let size = out_len.next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(size);
        let inverse = planner.plan_fft_inverse(size);
        let mut kernel_hat = padded(kernel, size);
        forward.process(&mut kernel_hat);
        Self {
            max_input,
            out_len,
            kernel_hat,
            forward,
            inverse,
        }
    }

    /// Full linear convolution `(a * kernel)[n]`, `n < a.len() + kernel.len() - 1`.
    pub(crate) fn convolve(&self, a: &[f64]) -> Vec<f64> {
        assert!(a.len() <= self.max_input);
        let size = self.kernel_hat.len();
        let mut buf = padded(a, size);
        self.forward.process(&mut buf);
        for (x, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *x *= k;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / size as f64;
        buf.iter()
            .take(self.out_len)
            .map(|c| c.re * scale)
            .collect()
    }
}

fn padded(x: &[f64], size: usize) -> Vec<Complex<f64>> {
    let mut v = vec![Complex::new(0.0, 0.0); size];
    for (slot, &value) in v.iter_mut().zip(x) {
        slot.re = value;
    }
    v
}

pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    FixedKernel::new(b, a.len()).convolve(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_convolution() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.5, -1.0, 0.0, 4.0];
        let got = convolve(&a, &b);
        let mut want = vec![0.0; 6];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                want[i + j] += x * y;
            }
        }
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}
