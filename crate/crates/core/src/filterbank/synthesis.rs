//! Synthesis banks: the minimum-norm left inverse sampled on a grid, FIR
//! left inverses by least squares, and the reconstruction residual
//! `||G(w) H(w) - I||_F^2`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, Array3, Array4};
use num_complex::Complex64;

use super::{analysis_slots, sample_components, synthesis_slots, FilterBank};
use crate::error::{argument, Error, Result};
use crate::fft::Fft2;

/// Relative threshold on `p_H` below which the Gram matrix counts as singular.
pub const MIN_NORM_SINGULAR_TOL: f64 = 1e-12;

/// Synthesis filters `g_c`, each `q x q`; tap `b` sits at spatial offset
/// `b - origin` on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisBank {
    s: usize,
    origin: usize,
    filters: Array3<f64>,
}

impl SynthesisBank {
    pub fn new(s: usize, origin: usize, filters: Array3<f64>) -> Result<Self> {
        let (_, q1, q2) = filters.dim();
        if s == 0 {
            return Err(argument("downsampling factor must be at least 1"));
        }
        if q1 != q2 || q1 == 0 {
            return Err(argument(format!("synthesis filters must be square, got {q1}x{q2}")));
        }
        if filters.iter().any(|v| !v.is_finite()) {
            return Err(argument("synthesis taps must be finite"));
        }
        Ok(Self { s, origin, filters })
    }

    /// All-zero `q x q` synthesis filters whose window is centred on the
    /// centre of an `n x n` analysis filter reflected through the origin.
    pub fn zeros_for(analysis: &FilterBank, q: usize) -> Result<Self> {
        let origin = (q - 1 + analysis.size() - 1) / 2;
        Self::new(analysis.s(), origin, Array3::zeros((analysis.channels(), q, q)))
    }

    pub fn channels(&self) -> usize {
        self.filters.dim().0
    }

    pub fn size(&self) -> usize {
        self.filters.dim().1
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn filters(&self) -> &Array3<f64> {
        &self.filters
    }

    pub fn filters_mut(&mut self) -> &mut Array3<f64> {
        &mut self.filters
    }

    /// `g_c` at spatial offset `t`, zero outside the window.
    pub fn tap(&self, c: usize, t: [i64; 2]) -> f64 {
        let q = self.size() as i64;
        let b = [t[0] + self.origin as i64, t[1] + self.origin as i64];
        if b.iter().all(|&x| (0..q).contains(&x)) {
            self.filters[[c, b[0] as usize, b[1] as usize]]
        } else {
            0.0
        }
    }
}

/// Minimum-norm synthesis `(H*H)^{-1} H*` sampled on the polyphase grid
/// `Theta_{N/s}^2` and inverted to taps on an `N x N` window (origin `N/2`).
///
/// The result is the periodization of the generally infinite min-norm
/// filters with period `N`; a signal of size `N x N` filtered circularly is
/// reconstructed exactly. Requires `s | N`.
pub fn min_norm_synthesis(fb: &FilterBank, grid_size: usize) -> Result<SynthesisBank> {
    let s = fb.s();
    if grid_size == 0 || grid_size % s != 0 {
        return Err(argument(format!(
            "synthesis support N = {grid_size} must be a positive multiple of s = {s}"
        )));
    }
    let m = grid_size / s;
    let fft = Fft2::new(m);
    let hh = sample_components(fb.filters(), &analysis_slots(fb.size(), s), s, &fft);
    let (nc, cosets, _, _) = hh.dim();

    let mut grams = Vec::with_capacity(m * m);
    let mut scale: f64 = 0.0;
    for k1 in 0..m {
        for k2 in 0..m {
            let h = DMatrix::from_fn(nc, cosets, |c, i| hh[[c, i, k1, k2]]);
            let g = h.adjoint() * &h;
            let lu = g.lu();
            let p = lu.determinant().re;
            scale = scale.max(p.abs());
            grams.push((h, lu, p));
        }
    }
    let mut pinv = Array4::<Complex64>::zeros((nc, cosets, m, m));
    for (idx, (h, lu, p)) in grams.into_iter().enumerate() {
        let k = [idx / m, idx % m];
        let singular = || Error::SingularGram { index: k, value: p };
        if !(p > MIN_NORM_SINGULAR_TOL * scale) || scale == 0.0 {
            return Err(singular());
        }
        let inv = lu.try_inverse().ok_or_else(singular)?;
        let hd = inv * h.adjoint();
        for c in 0..nc {
            for i in 0..cosets {
                pinv[[c, i, k[0], k[1]]] = hd[(i, c)];
            }
        }
    }

    let origin = grid_size / 2;
    let mut taps = Array3::zeros((nc, grid_size, grid_size));
    let norm = (m * m) as f64;
    for c in 0..nc {
        for i in 0..cosets {
            let v = super::coset_vector(s, i);
            let mut view = pinv.slice_mut(ndarray::s![c, i, .., ..]);
            let buf = view.as_slice_mut().unwrap();
            fft.inverse(buf);
            for m1 in 0..m {
                for m2 in 0..m {
                    let t = [s * m1 + v[0], s * m2 + v[1]];
                    let b = [(t[0] + origin) % grid_size, (t[1] + origin) % grid_size];
                    taps[[c, b[0], b[1]]] = buf[m1 * m + m2].re / norm;
                }
            }
        }
    }
    SynthesisBank::new(s, origin, taps)
}

/// `||G(w) H(w) - I||_F^2` at every point of `Theta_N^2`.
pub fn synthesis_residual(
    analysis: &FilterBank,
    synthesis: &SynthesisBank,
    grid_size: usize,
) -> Result<Array2<f64>> {
    let s = analysis.s();
    if synthesis.s() != s || synthesis.channels() != analysis.channels() {
        return Err(argument("synthesis bank does not match the analysis bank"));
    }
    let fft = Fft2::new(grid_size);
    let hh = sample_components(analysis.filters(), &analysis_slots(analysis.size(), s), s, &fft);
    let gg = sample_components(
        synthesis.filters(),
        &synthesis_slots(synthesis.size(), s, synthesis.origin()),
        s,
        &fft,
    );
    let (nc, cosets, _, _) = hh.dim();
    Ok(Array2::from_shape_fn((grid_size, grid_size), |(k1, k2)| {
        let mut total = 0.0;
        for i in 0..cosets {
            for j in 0..cosets {
                let mut z: Complex64 = (0..nc).map(|c| gg[[c, i, k1, k2]] * hh[[c, j, k1, k2]]).sum();
                if i == j {
                    z -= 1.0;
                }
                total += z.norm_sqr();
            }
        }
        total
    }))
}

/// Smallest correction `dx` with `A dx = r`, or the least-squares one when
/// the system is inconsistent or rank deficient.
fn min_norm_correction(a: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    let rn = r.norm();
    if rn == 0.0 {
        return DVector::zeros(a.ncols());
    }
    if a.nrows() <= a.ncols() {
        if let Some(ch) = (a * a.transpose()).cholesky() {
            let dx = a.transpose() * ch.solve(r);
            if (a * &dx - r).norm() <= 1e-10 * rn {
                return dx;
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let top = svd.singular_values.max();
    svd.solve(r, 1e-12 * top).expect("both factors were computed")
}

/// Refits the synthesis taps so that `G(z) H(z) = I` holds as an identity
/// of Laurent polynomials, moving the taps as little as possible.
///
/// Each row `i` of `G` is a linear system in the taps of coset `i`: the
/// coefficients of `sum_c G_{i,c} H_{c,j}` must equal `delta_{ij}` at the
/// zero power and vanish elsewhere. Underdetermined systems are solved
/// exactly with the minimum-norm correction; overdetermined ones in the
/// least-squares sense.
pub fn refit_synthesis(analysis: &FilterBank, synthesis: &SynthesisBank) -> Result<SynthesisBank> {
    let s = analysis.s();
    if synthesis.s() != s || synthesis.channels() != analysis.channels() {
        return Err(argument("synthesis bank does not match the analysis bank"));
    }
    let (n, q) = (analysis.size(), synthesis.size());
    let hs = analysis_slots(n, s);
    let gs = synthesis_slots(q, s, synthesis.origin());
    let nc = analysis.channels();
    let cosets = s * s;
    let mut out = synthesis.filters().clone();

    for i in 0..cosets {
        let unknowns: Vec<_> = (0..nc)
            .flat_map(|c| gs.iter().filter(move |sl| sl.coset == i).map(move |sl| (c, *sl)))
            .collect();
        let mut rows: HashMap<(usize, [i64; 2]), usize> = HashMap::new();
        rows.insert((i, [0, 0]), 0);
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (col, (c, gsl)) in unknowns.iter().enumerate() {
            for hsl in &hs {
                let val = analysis.filters()[[*c, hsl.tap / n, hsl.tap % n]];
                if val == 0.0 {
                    continue;
                }
                let p = [gsl.m[0] + hsl.m[0], gsl.m[1] + hsl.m[1]];
                let next = rows.len();
                let row = *rows.entry((hsl.coset, p)).or_insert(next);
                entries.push((row, col, val));
            }
        }
        let mut a = DMatrix::zeros(rows.len(), unknowns.len());
        for (r, c, v) in entries {
            a[(r, c)] += v;
        }
        let mut rhs = DVector::zeros(rows.len());
        rhs[0] = 1.0;
        let x0 = DVector::from_iterator(
            unknowns.len(),
            unknowns.iter().map(|(c, sl)| out[[*c, sl.tap / q, sl.tap % q]]),
        );
        let r = rhs - &a * &x0;
        let dx = min_norm_correction(&a, &r);
        for (col, (c, sl)) in unknowns.iter().enumerate() {
            out[[*c, sl.tap / q, sl.tap % q]] += dx[col];
        }
    }
    SynthesisBank::new(s, synthesis.origin(), out)
}

/// Coefficients of `G(z) H(z) - I` and their Jacobian with respect to the
/// analysis taps followed by the synthesis taps.
fn product_system(analysis: &FilterBank, synthesis: &SynthesisBank) -> (DVector<f64>, DMatrix<f64>) {
    let (s, n, q) = (analysis.s(), analysis.size(), synthesis.size());
    let nc = analysis.channels();
    let hs = analysis_slots(n, s);
    let gs = synthesis_slots(q, s, synthesis.origin());
    let nh = nc * n * n;
    let mut rows: HashMap<(usize, usize, [i64; 2]), usize> = HashMap::new();
    for i in 0..s * s {
        rows.insert((i, i, [0, 0]), i);
    }
    let mut value: Vec<f64> = vec![-1.0; s * s];
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for c in 0..nc {
        for gsl in &gs {
            let gv = synthesis.filters()[[c, gsl.tap / q, gsl.tap % q]];
            let gcol = nh + c * q * q + gsl.tap;
            for hsl in &hs {
                let hv = analysis.filters()[[c, hsl.tap / n, hsl.tap % n]];
                let p = [gsl.m[0] + hsl.m[0], gsl.m[1] + hsl.m[1]];
                let next = rows.len();
                let row = *rows.entry((gsl.coset, hsl.coset, p)).or_insert(next);
                if row == value.len() {
                    value.push(0.0);
                }
                value[row] += gv * hv;
                entries.push((row, c * n * n + hsl.tap, gv));
                entries.push((row, gcol, hv));
            }
        }
    }
    let mut jac = DMatrix::zeros(value.len(), nh + nc * q * q);
    for (r, col, v) in entries {
        jac[(r, col)] += v;
    }
    (DVector::from_vec(value), jac)
}

/// Coefficient residual norm below which [`polish_pair`] stops.
pub const POLISH_TOL: f64 = 1e-12;

/// Damped least-squares step `-(J^T J + mu I)^{-1} J^T r`, solved in the
/// smaller of the primal and dual forms.
fn damped_step(jac: &DMatrix<f64>, r: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    if jac.nrows() < jac.ncols() {
        let mut m = jac * jac.transpose();
        for k in 0..m.nrows() {
            m[(k, k)] += mu;
        }
        Some(-(jac.transpose() * m.cholesky()?.solve(r)))
    } else {
        let mut m = jac.transpose() * jac;
        for k in 0..m.nrows() {
            m[(k, k)] += mu;
        }
        Some(-m.cholesky()?.solve(&(jac.transpose() * r)))
    }
}

/// Levenberg-Marquardt on all analysis and synthesis taps towards the
/// identity `G(z) H(z) = I`. Returns the pair unchanged if it already
/// satisfies the identity. Stops after `max_steps` or when no damped step
/// reduces the coefficient residual.
pub fn polish_pair(
    analysis: &FilterBank,
    synthesis: &SynthesisBank,
    max_steps: usize,
) -> Result<(FilterBank, SynthesisBank)> {
    let s = analysis.s();
    if synthesis.s() != s || synthesis.channels() != analysis.channels() {
        return Err(argument("synthesis bank does not match the analysis bank"));
    }
    let nh = analysis.filters().len();
    let mut h = analysis.clone();
    let mut g = synthesis.clone();
    let (mut r, mut jac) = product_system(&h, &g);
    let scale = jac.iter().map(|v| v * v).sum::<f64>() / jac.ncols() as f64;
    let mut mu = 1e-3 * scale;
    for _ in 0..max_steps {
        let before = r.norm();
        if before < POLISH_TOL {
            break;
        }
        let mut accepted = false;
        for _ in 0..12 {
            let Some(dx) = damped_step(&jac, &r, mu) else {
                mu *= 4.0;
                continue;
            };
            let mut h2 = h.clone();
            let mut g2 = g.clone();
            for (x, d) in h2.filters_mut().iter_mut().zip(dx.iter()) {
                *x += d;
            }
            for (x, d) in g2.filters_mut().iter_mut().zip(dx.iter().skip(nh)) {
                *x += d;
            }
            let (r2, j2) = product_system(&h2, &g2);
            if r2.norm() < before {
                (h, g, r, jac) = (h2, g2, r2, j2);
                mu = (mu / 3.0).max(1e-15 * scale);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    Ok((h, g))
}
