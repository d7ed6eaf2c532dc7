//! Zero-padded multidimensional cyclic convolution with a fixed kernel
//! tensor, evaluated through separable FFTs.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Smallest `m >= target` whose only prime factors are 2, 3, 5 and 7.
pub fn efficient_length(target: usize) -> usize {
    let mut m = target.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Convolution plan for inputs on a `span^n` box against a kernel given on
/// offsets `-(span-1)..=span-1` per axis.
pub struct ConvolutionPlan {
    span: usize,
    padded: Vec<usize>,
    /// Transform of the kernel tensor, pre-divided by the padded volume.
    spectrum: Vec<Complex64>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl fmt::Debug for ConvolutionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvolutionPlan")
            .field("span", &self.span)
            .field("padded", &self.padded)
            .finish()
    }
}

impl ConvolutionPlan {
    /// `kernel` receives an offset vector and returns the kernel weight.
    pub fn new(dimension: usize, span: usize, kernel: impl Fn(&[i64]) -> f64) -> Self {
        Self::with_padding(dimension, span, efficient_length(2 * span - 1), kernel)
    }

    /// Explicit padded axis length; must be at least `2*span - 1`.
    pub fn with_padding(
        dimension: usize,
        span: usize,
        padded_len: usize,
        kernel: impl Fn(&[i64]) -> f64,
    ) -> Self {
        assert!(padded_len + 1 >= 2 * span, "padding too short for span {span}");
        let padded = vec![padded_len; dimension];
        let mut planner = FftPlanner::new();
        let forward = padded.iter().map(|&m| planner.plan_fft_forward(m)).collect();
        let inverse = padded.iter().map(|&m| planner.plan_fft_inverse(m)).collect();

        let volume: usize = padded.iter().product();
        let mut tensor = vec![Complex64::new(0.0, 0.0); volume];
        let reach = span as i64 - 1;
        let width = 2 * span - 1;
        let mut offset = vec![0i64; dimension];
        for flat in 0..width.pow(dimension as u32) {
            let mut rem = flat;
            for slot in offset.iter_mut().rev() {
                *slot = (rem % width) as i64 - reach;
                rem /= width;
            }
            let idx = offset.iter().zip(&padded).fold(0usize, |acc, (&d, &m)| {
                acc * m + d.rem_euclid(m as i64) as usize
            });
            tensor[idx] = Complex64::new(kernel(&offset), 0.0);
        }

        let mut plan = Self {
            span,
            padded,
            spectrum: Vec::new(),
            forward,
            inverse,
        };
        plan.transform(&mut tensor, true);
        let scale = 1.0 / volume as f64;
        tensor.iter_mut().for_each(|z| *z *= scale);
        plan.spectrum = tensor;
        plan
    }

    pub fn padded_lengths(&self) -> &[usize] {
        &self.padded
    }

    /// `out[y] = sum_x k(y - x) v[x]` over the `span^n` box, both in
    /// row-major order.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.padded.len();
        let span = self.span;
        let volume: usize = self.padded.iter().product();
        let mut buf = vec![Complex64::new(0.0, 0.0); volume];

        let mut coords = vec![0usize; n];
        for (flat, &x) in v.iter().enumerate() {
            buf[self.embed(flat, span, &mut coords)] = Complex64::new(x, 0.0);
        }
        self.transform(&mut buf, true);
        buf.iter_mut().zip(&self.spectrum).for_each(|(z, k)| *z *= k);
        self.transform(&mut buf, false);
        for (flat, slot) in out.iter_mut().enumerate() {
            *slot = buf[self.embed(flat, span, &mut coords)].re;
        }
    }

    #[inline]
    fn embed(&self, mut flat: usize, span: usize, coords: &mut [usize]) -> usize {
        for c in coords.iter_mut().rev() {
            *c = flat % span;
            flat /= span;
        }
        coords
            .iter()
            .zip(&self.padded)
            .fold(0usize, |acc, (&c, &m)| acc * m + c)
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        let plans = if forward { &self.forward } else { &self.inverse };
        let n = self.padded.len();
        let volume = buf.len();
        let mut lines = vec![Complex64::new(0.0, 0.0); volume];
        for axis in 0..n {
            let m = self.padded[axis];
            let stride: usize = self.padded[axis + 1..].iter().product();
            let fft = &plans[axis];
            if stride == 1 {
                fft.process(buf);
                continue;
            }
            // Gather every line along `axis` into contiguous storage.
            let outer = volume / (m * stride);
            let mut k = 0;
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * m * stride + s;
                    for j in 0..m {
                        lines[k] = buf[base + j * stride];
                        k += 1;
                    }
                }
            }
            fft.process(&mut lines);
            let mut k = 0;
            for o in 0..outer {
                for s in 0..stride {
                    let base = o * m * stride + s;
                    for j in 0..m {
                        buf[base + j * stride] = lines[k];
                        k += 1;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficient_lengths() {
        assert_eq!(efficient_length(1), 1);
        assert_eq!(efficient_length(11), 12);
        assert_eq!(efficient_length(13), 14);
        assert_eq!(efficient_length(255), 256);
        assert_eq!(efficient_length(121), 125);
    }

    fn direct(dimension: usize, span: usize, v: &[f64], k: &dyn Fn(&[i64]) -> f64) -> Vec<f64> {
        let len = span.pow(dimension as u32);
        let coords = |mut i: usize| {
            let mut c = vec![0i64; dimension];
            for slot in c.iter_mut().rev() {
                *slot = (i % span) as i64;
                i /= span;
            }
            c
        };
        (0..len)
            .map(|y| {
                let cy = coords(y);
                (0..len)
                    .map(|x| {
                        let cx = coords(x);
                        let d: Vec<i64> = cy.iter().zip(&cx).map(|(a, b)| a - b).collect();
                        k(&d) * v[x]
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum_for_any_padding() {
        let k = |d: &[i64]| {
            d.iter()
                .enumerate()
                .map(|(i, &x)| (i as f64 + 1.0) * x as f64 + 0.1 * (x * x) as f64)
                .sum::<f64>()
                .sin()
        };
        for dimension in 1..=3 {
            let span: usize = 4;
            let len = span.pow(dimension as u32);
            let v: Vec<f64> = (0..len).map(|i| ((i * 7 % 11) as f64) - 5.0).collect();
            let expect = direct(dimension, span, &v, &k);
            for pad in [7, 8, 9, 13] {
                let plan = ConvolutionPlan::with_padding(dimension, span, pad, k);
                let mut out = vec![0.0; len];
                plan.apply(&v, &mut out);
                for (a, b) in out.iter().zip(&expect) {
                    assert!((a - b).abs() < 1e-11, "pad {pad}: {a} vs {b}");
                }
            }
        }
    }
}
