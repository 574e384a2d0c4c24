//! Multivariate trigonometric polynomials and their samples on uniform grids.
//!
//! A [`TrigPoly`] of dimension `d` and component degree `n` stores the dense
//! coefficient tensor `c_k`, `k in {-n..n}^d`, row-major with an index offset
//! of `+n` (so `k = -n` lives at position 0 along each axis). It represents
//!
//! ```text
//! p(theta) = sum_k c_k exp(j k . theta)
//! ```
//!
//! Uniform samples on `Theta_N^d = {2 pi k / N : k in [N]^d}` are held in a
//! [`SampleGrid`].

use std::f64::consts::PI;

use ndarray::{ArrayD, Axis, Dimension, IxDyn};
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{argument, precondition, Result};
use crate::fft::transform_all_axes;

/// Relative tolerance for treating sampled values as real, scaled by the
/// coefficient l1 norm of the sampled polynomial.
pub const REAL_TOL: f64 = 1e-9;

/// Absolute tolerance for Hermitian symmetry of coefficients.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// A `d`-variate trigonometric polynomial with uniform component degree `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    degree: usize,
    coeffs: ArrayD<Complex64>,
}

impl TrigPoly {
    /// Wraps a coefficient tensor of shape `[2n+1; d]`.
    pub fn new(dim: usize, degree: usize, coeffs: ArrayD<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(argument("dimension must be at least 1"));
        }
        let side = 2 * degree + 1;
        if coeffs.shape() != vec![side; dim].as_slice() {
            return Err(argument(format!(
                "coefficient tensor has shape {:?}, expected [{side}; {dim}]",
                coeffs.shape()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(argument("coefficients must be finite"));
        }
        Ok(Self { degree, coeffs })
    }

    /// Builds from a row-major flattened coefficient list (`k_1` slowest).
    pub fn from_flat(dim: usize, degree: usize, flat: Vec<Complex64>) -> Result<Self> {
        let side = 2 * degree + 1;
        let coeffs = ArrayD::from_shape_vec(IxDyn(&vec![side; dim]), flat)
            .map_err(|e| argument(format!("coefficient count mismatch: {e}")))?;
        Self::new(dim, degree, coeffs)
    }

    pub fn zeros(dim: usize, degree: usize) -> Self {
        let side = 2 * degree + 1;
        Self {
            degree,
            coeffs: ArrayD::zeros(IxDyn(&vec![side; dim.max(1)])),
        }
    }

    pub fn constant(dim: usize, degree: usize, value: Complex64) -> Self {
        let mut p = Self::zeros(dim, degree);
        p.set_coeff(&vec![0; dim.max(1)], value);
        p
    }

    /// Builds a polynomial from a function of the frequency index `k`.
    pub fn from_fn(dim: usize, degree: usize, mut f: impl FnMut(&[i64]) -> Complex64) -> Self {
        let mut p = Self::zeros(dim, degree);
        let n = degree as i64;
        let mut k = vec![0i64; dim];
        for (idx, c) in p.coeffs.indexed_iter_mut() {
            for (ki, &ii) in k.iter_mut().zip(idx.slice()) {
                *ki = ii as i64 - n;
            }
            *c = f(&k);
        }
        p
    }

    /// The normalized `n`-th order Dirichlet kernel `D_n^d / (2n+1)^d`: all
    /// coefficients equal, maximum value 1 at the origin.
    pub fn normalized_dirichlet(dim: usize, degree: usize) -> Self {
        let w = 1.0 / ((2 * degree + 1) as f64).powi(dim as i32);
        Self::from_fn(dim, degree, |_| Complex64::new(w, 0.0))
    }

    /// Univariate real polynomial `c0 + sum_k (a_k cos(k t) + b_k sin(k t))`.
    pub fn from_real_fourier(constant: f64, cos: &[f64], sin: &[f64]) -> Result<Self> {
        if cos.len() != sin.len() {
            return Err(argument("cosine and sine coefficient lists differ in length"));
        }
        let n = cos.len();
        Ok(Self::from_fn(1, n, |k| {
            let k0 = k[0];
            if k0 == 0 {
                return Complex64::new(constant, 0.0);
            }
            let i = k0.unsigned_abs() as usize - 1;
            // a cos + b sin = (a - jb)/2 e^{jkt} + (a + jb)/2 e^{-jkt}
            let sign = if k0 > 0 { -1.0 } else { 1.0 };
            Complex64::new(cos[i] / 2.0, sign * sin[i] / 2.0)
        }))
    }

    pub fn dim(&self) -> usize {
        self.coeffs.ndim()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &ArrayD<Complex64> {
        &self.coeffs
    }

    fn position(&self, k: &[i64]) -> Option<Vec<usize>> {
        let n = self.degree as i64;
        if k.len() != self.dim() || k.iter().any(|&ki| ki.abs() > n) {
            return None;
        }
        Some(k.iter().map(|&ki| (ki + n) as usize).collect())
    }

    /// Coefficient `c_k`; zero outside `{-n..n}^d`.
    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        self.position(k)
            .map(|pos| self.coeffs[IxDyn(&pos)])
            .unwrap_or_default()
    }

    /// Sets `c_k`.
    ///
    /// # Panics
    /// If `k` lies outside `{-n..n}^d`.
    pub fn set_coeff(&mut self, k: &[i64], value: Complex64) {
        let pos = self
            .position(k)
            .unwrap_or_else(|| panic!("frequency {k:?} outside degree {}", self.degree));
        self.coeffs[IxDyn(&pos)] = value;
    }

    /// `sum_k |c_k|`, an upper bound on `||p||_inf`.
    pub fn abs_sum(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// True iff `c_k = conj(c_{-k})` for all `k`.
    pub fn is_real(&self) -> bool {
        let len = self.coeffs.len();
        let flat = self.coeffs.as_slice().expect("coefficients are standard layout");
        // Row-major over a symmetric index box: -k sits at the mirrored position.
        (0..len).all(|i| (flat[i] - flat[len - 1 - i].conj()).norm() <= HERMITIAN_TOL)
    }

    /// Direct evaluation `sum_k c_k e^{j k . theta}`.
    pub fn eval(&self, theta: &[f64]) -> Result<Complex64> {
        let d = self.dim();
        if theta.len() != d {
            return Err(argument(format!(
                "point has {} coordinates, polynomial has dimension {d}",
                theta.len()
            )));
        }
        let side = 2 * self.degree + 1;
        let n = self.degree as i64;
        let table: Vec<Vec<Complex64>> = theta
            .iter()
            .map(|&t| {
                let t = t.rem_euclid(2.0 * PI);
                (0..side)
                    .map(|i| Complex64::from_polar(1.0, (i as i64 - n) as f64 * t))
                    .collect()
            })
            .collect();
        let mut acc = Complex64::default();
        for (idx, c) in self.coeffs.indexed_iter() {
            let mut term = *c;
            for (ax, &i) in idx.slice().iter().enumerate() {
                term *= table[ax][i];
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Samples on `Theta_N^d` by a zero-padded inverse DFT.
    ///
    /// Coefficient `c_k` is accumulated into slot `k mod N`; when
    /// `N < 2n+1` several coefficients share a slot, which still yields the
    /// exact samples because `e^{2 pi j k m / N}` depends only on `k mod N`.
    pub fn sample_uniform(&self, grid_size: usize) -> Result<SampleGrid> {
        if grid_size == 0 {
            return Err(argument("grid size must be at least 1"));
        }
        let d = self.dim();
        let mut values = ArrayD::<Complex64>::zeros(IxDyn(&vec![grid_size; d]));
        let n = self.degree as i64;
        let big_n = grid_size as i64;
        let mut slot = vec![0usize; d];
        for (idx, c) in self.coeffs.indexed_iter() {
            for (s, &i) in slot.iter_mut().zip(idx.slice()) {
                *s = (i as i64 - n).rem_euclid(big_n) as usize;
            }
            values[IxDyn(&slot)] += *c;
        }
        transform_all_axes(&mut values, FftDirection::Inverse);
        Ok(SampleGrid {
            grid_size,
            values,
            scale: self.abs_sum(),
        })
    }

    /// Recovers the degree-`n` coefficients from samples (forward DFT divided
    /// by `N^d`). Exact inverse of [`sample_uniform`](Self::sample_uniform)
    /// when the samples come from a polynomial of degree at most `n`.
    pub fn from_samples(grid: &SampleGrid, degree: usize) -> Result<Self> {
        let big_n = grid.grid_size();
        if big_n < 2 * degree + 1 {
            return Err(precondition(format!(
                "N = {big_n} samples per axis cannot resolve degree {degree} (need N >= {})",
                2 * degree + 1
            )));
        }
        let d = grid.dim();
        let mut spectrum = grid.values.clone();
        transform_all_axes(&mut spectrum, FftDirection::Forward);
        let norm = (big_n as f64).powi(d as i32);
        let n = degree as i64;
        let mut slot = vec![0usize; d];
        let mut out = Self::zeros(d, degree);
        for (idx, c) in out.coeffs.indexed_iter_mut() {
            for (s, &i) in slot.iter_mut().zip(idx.slice()) {
                *s = (i as i64 - n).rem_euclid(big_n as i64) as usize;
            }
            *c = spectrum[IxDyn(&slot)] / norm;
        }
        Ok(out)
    }

    /// Extremal statistics of the samples on `Theta_N^d` without holding the
    /// whole grid in memory.
    ///
    /// The transform runs along the trailing `d-1` axes for each of the
    /// `2n+1` leading-axis coefficient slabs, then along the leading axis one
    /// column at a time. Peak memory is `(2n+1) N^{d-1}` complex values
    /// instead of `N^d`.
    pub fn sample_stats(&self, grid_size: usize) -> Result<GridStats> {
        if grid_size == 0 {
            return Err(argument("grid size must be at least 1"));
        }
        let d = self.dim();
        if d == 1 {
            return Ok(self.sample_uniform(grid_size)?.stats());
        }
        let side = 2 * self.degree + 1;
        let slabs: Vec<Vec<Complex64>> = (0..side)
            .map(|j| {
                let sub = self.coeffs.index_axis(Axis(0), j).to_owned();
                let sub = TrigPoly {
                    degree: self.degree,
                    coeffs: sub,
                };
                let grid = sub.sample_uniform(grid_size)?;
                Ok(grid.values.into_raw_vec_and_offset().0)
            })
            .collect::<Result<_>>()?;
        let columns = slabs[0].len();
        let n = self.degree as i64;
        let slots: Vec<usize> = (0..side)
            .map(|j| (j as i64 - n).rem_euclid(grid_size as i64) as usize)
            .collect();

        let mut planner = rustfft::FftPlanner::new();
        let plan = planner.plan_fft_inverse(grid_size);
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        let mut buf = vec![Complex64::default(); grid_size];
        let mut acc = StatsAccumulator::new();
        for col in 0..columns {
            buf.iter_mut().for_each(|b| *b = Complex64::default());
            for (slab, &s) in slabs.iter().zip(&slots) {
                buf[s] += slab[col];
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for v in &buf {
                acc.push(*v);
            }
        }
        Ok(acc.finish(d, grid_size, self.abs_sum()))
    }
}

/// Values of a polynomial on `Theta_N^d`: entry `k in [N]^d` holds
/// `p(2 pi k / N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    grid_size: usize,
    values: ArrayD<Complex64>,
    scale: f64,
}

impl SampleGrid {
    /// Wraps raw samples of shape `[N; d]`. The realness tolerance scale is
    /// taken as the maximum modulus of the values.
    pub fn from_values(values: ArrayD<Complex64>) -> Result<Self> {
        let shape = values.shape().to_vec();
        let Some(&grid_size) = shape.first() else {
            return Err(argument("sample grid must have at least one axis"));
        };
        if grid_size == 0 || shape.iter().any(|&s| s != grid_size) {
            return Err(argument(format!("sample grid shape {shape:?} is not [N; d]")));
        }
        let scale = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(Self {
            grid_size,
            values,
            scale,
        })
    }

    /// Overrides the scale used by the realness test.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn dim(&self) -> usize {
        self.values.ndim()
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn values(&self) -> &ArrayD<Complex64> {
        &self.values
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn get(&self, k: &[usize]) -> Complex64 {
        self.values[IxDyn(k)]
    }

    /// The grid point `2 pi k / N`.
    pub fn point(&self, k: &[usize]) -> Vec<f64> {
        k.iter()
            .map(|&ki| 2.0 * PI * ki as f64 / self.grid_size as f64)
            .collect()
    }

    /// `||p||_{N^d, inf}`.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.stats().is_real()
    }

    pub fn stats(&self) -> GridStats {
        let mut acc = StatsAccumulator::new();
        for v in self.values.iter() {
            acc.push(*v);
        }
        acc.finish(self.dim(), self.grid_size, self.scale)
    }
}

/// Extremal statistics of a sample grid; everything the bounds need.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GridStats {
    pub dim: usize,
    pub grid_size: usize,
    /// Maximum modulus over the grid.
    pub max_abs: f64,
    /// `A`: maximum real part over the grid.
    pub max: f64,
    /// `B`: minimum real part over the grid.
    pub min: f64,
    /// Largest imaginary-part magnitude.
    pub max_imag: f64,
    /// Scale for the realness tolerance.
    pub scale: f64,
}

impl GridStats {
    /// Stats of a real grid given only its extrema.
    pub fn real(dim: usize, grid_size: usize, max: f64, min: f64) -> Self {
        let max_abs = max.abs().max(min.abs());
        Self {
            dim,
            grid_size,
            max_abs,
            max,
            min,
            max_imag: 0.0,
            scale: max_abs,
        }
    }

    pub fn is_real(&self) -> bool {
        self.max_imag <= REAL_TOL * self.scale
    }
}

struct StatsAccumulator {
    max_abs: f64,
    max: f64,
    min: f64,
    max_imag: f64,
}

impl StatsAccumulator {
    fn new() -> Self {
        Self {
            max_abs: 0.0,
            max: f64::NEG_INFINITY,
            min: f64::INFINITY,
            max_imag: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, v: Complex64) {
        self.max_abs = self.max_abs.max(v.norm());
        self.max = self.max.max(v.re);
        self.min = self.min.min(v.re);
        self.max_imag = self.max_imag.max(v.im.abs());
    }

    fn finish(self, dim: usize, grid_size: usize, scale: f64) -> GridStats {
        GridStats {
            dim,
            grid_size,
            max_abs: self.max_abs,
            max: self.max,
            min: self.min,
            max_imag: self.max_imag,
            scale,
        }
    }
}
