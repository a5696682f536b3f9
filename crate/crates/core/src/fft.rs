//! Multi-dimensional complex FFT over cubic grids, built from rustfft line transforms.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Number of contiguous lines handed to one rayon task.
const LINES_PER_TASK: usize = 16;

#[derive(Clone)]
pub struct FftNd {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FftNd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftNd")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl FftNd {
    pub fn new(dim: usize, n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftNd {
            dim,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Unnormalized forward transform, `û_k = Σ_x u_x e^{-i k·x}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/n^dim` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "buffer length does not match plan");
        let n = self.n;
        let scratch_len = plan.get_inplace_scratch_len();
        let run_lines = |buf: &mut [Complex64]| {
            buf.par_chunks_mut(n * LINES_PER_TASK).for_each_init(
                || vec![Complex64::default(); scratch_len],
                |scratch, chunk| plan.process_with_scratch(chunk, scratch),
            );
        };

        // last axis is contiguous
        run_lines(data);
        if self.dim == 1 {
            return;
        }

        let mut lines = vec![Complex64::default(); data.len()];
        for axis in 0..self.dim - 1 {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = n * stride;
            // gather: line l = outer * stride + inner holds data[outer*block + j*stride + inner]
            {
                let src = &*data;
                lines.par_chunks_mut(n).enumerate().for_each(|(l, line)| {
                    let outer = l / stride;
                    let inner = l % stride;
                    let base = outer * block + inner;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = src[base + j * stride];
                    }
                });
            }
            run_lines(&mut lines);
            // scatter row r = outer * n + j
            {
                let src = &lines;
                data.par_chunks_mut(stride).enumerate().for_each(|(r, row)| {
                    let outer = r / n;
                    let j = r % n;
                    for (inner, v) in row.iter_mut().enumerate() {
                        *v = src[(outer * stride + inner) * n + j];
                    }
                });
            }
        }
    }
}
