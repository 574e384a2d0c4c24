//! Thin helpers over `rustfft` for transforms along every axis of an
//! n-dimensional array and for square 2D buffers.

use std::sync::Arc;

use ndarray::{ArrayD, Axis};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

/// Unnormalized transform along every axis of `data`.
///
/// `Forward` computes `sum_m x[m] e^{-2 pi j k.m / N}`, `Inverse` the same
/// with `+j`.
pub fn transform_all_axes(data: &mut ArrayD<Complex64>, direction: FftDirection) {
    let mut planner = FftPlanner::new();
    for ax in 0..data.ndim() {
        let len = data.shape()[ax];
        if len <= 1 {
            continue;
        }
        let plan = planner.plan_fft(len, direction);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut buf = vec![Complex64::default(); len];
        for mut lane in data.lanes_mut(Axis(ax)) {
            if let Some(slice) = lane.as_slice_mut() {
                plan.process_with_scratch(slice, &mut scratch);
            } else {
                for (b, v) in buf.iter_mut().zip(lane.iter()) {
                    *b = *v;
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for (v, b) in lane.iter_mut().zip(buf.iter()) {
                    *v = *b;
                }
            }
        }
    }
}

/// Reusable plans for unnormalized `n x n` transforms on row-major buffers.
#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len())
            .max(n);
        Self {
            n,
            forward,
            inverse,
            scratch_len,
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, FftDirection::Forward, None);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, FftDirection::Inverse, None);
    }

    /// Forward transform of a buffer whose nonzero rows are all listed in
    /// `rows`; the row pass skips the other rows.
    pub fn forward_sparse_rows(&self, buf: &mut [Complex64], rows: &[usize]) {
        self.run(buf, FftDirection::Forward, Some(rows));
    }

    fn run(&self, buf: &mut [Complex64], direction: FftDirection, rows: Option<&[usize]>) {
        let n = self.n;
        assert_eq!(buf.len(), n * n, "buffer is not n x n");
        let plan = match direction {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.inverse,
        };
        let mut scratch = vec![Complex64::default(); self.scratch_len];
        match rows {
            Some(rows) => {
                for &r in rows {
                    plan.process_with_scratch(&mut buf[r * n..(r + 1) * n], &mut scratch);
                }
            }
            None => plan.process_with_scratch(buf, &mut scratch),
        }
        let mut col = vec![Complex64::default(); n];
        for c in 0..n {
            for r in 0..n {
                col[r] = buf[r * n + c];
            }
            plan.process_with_scratch(&mut col, &mut scratch);
            for r in 0..n {
                buf[r * n + c] = col[r];
            }
        }
    }
}
