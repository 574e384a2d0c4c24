//! Running images through an analysis/synthesis pair with circular
//! boundary handling.

use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64;
use rustfft::FftDirection;

use super::synthesis::SynthesisBank;
use super::FilterBank;
use crate::error::{argument, Result};
use crate::fft::transform_all_axes;

/// Reported PSNR for exact reconstructions.
pub const PSNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Clone)]
pub struct ApplyResult {
    /// One downsampled subband per channel.
    pub subbands: Vec<Array2<f64>>,
    /// Same shape as the input image.
    pub reconstruction: Array2<f64>,
    pub psnr: f64,
}

/// `10 log10(peak^2 / mse)` with `peak = max(reference)`, capped at
/// [`PSNR_CAP_DB`].
pub fn psnr(reference: &Array2<f64>, test: &Array2<f64>) -> Result<f64> {
    if reference.dim() != test.dim() || reference.is_empty() {
        return Err(argument("images differ in shape or are empty"));
    }
    let mse = reference
        .iter()
        .zip(test)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.len() as f64;
    let peak = reference.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB))
}

fn spectrum(x: &Array2<f64>) -> ArrayD<Complex64> {
    let mut out = x.mapv(|v| Complex64::new(v, 0.0)).into_dyn();
    transform_all_axes(&mut out, FftDirection::Forward);
    out
}

/// Taps placed at spatial offsets `shift + (a1, a2)` on an `r x c` torus,
/// transformed.
fn kernel_spectrum(taps: ndarray::ArrayView2<f64>, shift: i64, shape: (usize, usize)) -> ArrayD<Complex64> {
    let (r, c) = shape;
    let mut buf = ArrayD::<Complex64>::zeros(IxDyn(&[r, c]));
    for ((a1, a2), &v) in taps.indexed_iter() {
        let i = (a1 as i64 + shift).rem_euclid(r as i64) as usize;
        let j = (a2 as i64 + shift).rem_euclid(c as i64) as usize;
        buf[[i, j]] += v;
    }
    transform_all_axes(&mut buf, FftDirection::Forward);
    buf
}

/// Analysis (circular convolution, downsampling by `s`), then synthesis
/// (upsampling, circular convolution) and summation over channels. Images
/// whose sides are not multiples of `s` are extended periodically and the
/// reconstruction is cropped back.
pub fn apply(analysis: &FilterBank, synthesis: &SynthesisBank, image: &Array2<f64>) -> Result<ApplyResult> {
    let s = analysis.s();
    if synthesis.s() != s || synthesis.channels() != analysis.channels() {
        return Err(argument("synthesis bank does not match the analysis bank"));
    }
    let (r0, c0) = image.dim();
    if r0 == 0 || c0 == 0 {
        return Err(argument("image is empty"));
    }
    let (r, c) = (r0.div_ceil(s) * s, c0.div_ceil(s) * s);
    let x = Array2::from_shape_fn((r, c), |(i, j)| image[[i % r0, j % c0]]);
    let xf = spectrum(&x);
    let norm = (r * c) as f64;
    let mut acc = ArrayD::<Complex64>::zeros(IxDyn(&[r, c]));
    let mut subbands = Vec::with_capacity(analysis.channels());
    let origin = synthesis.origin() as i64;
    for ch in 0..analysis.channels() {
        let hf = kernel_spectrum(analysis.filters().index_axis(ndarray::Axis(0), ch), 0, (r, c));
        let mut y = &xf * &hf;
        transform_all_axes(&mut y, FftDirection::Inverse);
        let sub = Array2::from_shape_fn((r / s, c / s), |(i, j)| y[[s * i, s * j]].re / norm);
        let mut up = Array2::zeros((r, c));
        for ((i, j), &v) in sub.indexed_iter() {
            up[[s * i, s * j]] = v;
        }
        let gf = kernel_spectrum(synthesis.filters().index_axis(ndarray::Axis(0), ch), -origin, (r, c));
        acc = acc + spectrum(&up) * gf;
        subbands.push(sub);
    }
    transform_all_axes(&mut acc, FftDirection::Inverse);
    let reconstruction = Array2::from_shape_fn((r0, c0), |(i, j)| acc[[i, j]].re / norm);
    let psnr = psnr(image, &reconstruction)?;
    Ok(ApplyResult {
        subbands,
        reconstruction,
        psnr,
    })
}
