//! Two-dimensional multirate filter banks with uniform downsampling
//! `M = s I_2`: polyphase analysis, the polyphase Gram determinant `p_H`,
//! perfect-reconstruction certificates, design by gradient descent and
//! synthesis banks.
//!
//! Conventions. Coset vectors `v_i in {0..s-1}^2` are enumerated
//! lexicographically, `i = v_1 s + v_2`. The analysis polyphase component is
//! `h^i[m] = h[s m - v_i]` and the synthesis component `g^i[m] = g[s m + v_i]`,
//! with transforms `H_{c,i}(w) = sum_m h_c^i[m] e^{-j w.m}` and likewise for
//! `G_{i,c}`. With these, a signal's polyphase vector is reconstructed as
//! `X^(w) = G(w) H(w) X(w)`.
//!
//! Analysis filters occupy `[0, n)^2`. Synthesis taps carry an `origin`: tap
//! `b` sits at spatial offset `b - origin` on each axis, so left inverses
//! (which need non-causal taps) are representable.

mod apply;
mod design;
mod objective;
mod synthesis;
mod tiling;

use nalgebra::DMatrix;
use ndarray::{Array2, Array3, Array4};
use num_complex::Complex64;
use serde::Serialize;

use crate::bounds::{certify_positive, BoundConstant, BoundReport};
use crate::error::{argument, precondition, Result};
use crate::fft::Fft2;
use crate::poly::SampleGrid;

pub use apply::{apply, psnr, ApplyResult, PSNR_CAP_DB};
pub use design::{
    design, design_with_synthesis, Adam, CoDesignResult, DesignResult, DesignSpec, Init,
    InitStrategy, PenaltySchedule, RESIDUAL_TARGET,
};
pub use objective::{objective, Evaluation, Objective, ObjectiveParts};
pub use synthesis::{
    min_norm_synthesis, polish_pair, refit_synthesis, synthesis_residual, SynthesisBank, MIN_NORM_SINGULAR_TOL,
    POLISH_TOL,
};
pub use tiling::{desired_from_tiling, WedgeTiling};

/// Analysis filter bank: `N_c` real `n x n` filters and downsampling factor `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    s: usize,
    filters: Array3<f64>,
}

impl FilterBank {
    /// `filters` has shape `N_c x n x n`; requires `N_c >= s^2` and finite taps.
    pub fn new(s: usize, filters: Array3<f64>) -> Result<Self> {
        let (nc, n1, n2) = filters.dim();
        if s == 0 {
            return Err(argument("downsampling factor must be at least 1"));
        }
        if n1 != n2 || n1 == 0 {
            return Err(argument(format!("filters must be square and non-empty, got {n1}x{n2}")));
        }
        if nc < s * s {
            return Err(argument(format!(
                "{nc} channels cannot be perfect reconstruction with |M| = {}",
                s * s
            )));
        }
        if filters.iter().any(|v| !v.is_finite()) {
            return Err(argument("filter taps must be finite"));
        }
        Ok(Self { s, filters })
    }

    pub fn zeros(channels: usize, size: usize, s: usize) -> Result<Self> {
        Self::new(s, Array3::zeros((channels, size, size)))
    }

    /// The `s^2` unit taps at `s m - v_i = 0`-aligned positions: channel `i`
    /// is a unit tap at `(-v_i) mod s`, so its only polyphase component sits
    /// in coset `i`.
    pub fn unit_taps(s: usize) -> Self {
        let mut f = Array3::zeros((s * s, s, s));
        for i in 0..s * s {
            let v = coset_vector(s, i);
            f[[i, (s - v[0]) % s, (s - v[1]) % s]] = 1.0;
        }
        Self { s, filters: f }
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

    pub fn filters(&self) -> &Array3<f64> {
        &self.filters
    }

    pub fn filters_mut(&mut self) -> &mut Array3<f64> {
        &mut self.filters
    }

    pub fn into_filters(self) -> Array3<f64> {
        self.filters
    }

    /// `degree_bound(n, s, 2)` for this bank.
    pub fn ph_degree(&self) -> usize {
        degree_bound(self.size(), self.s, 2)
    }
}

/// `v_i` for coset index `i`.
pub fn coset_vector(s: usize, i: usize) -> [usize; 2] {
    [i / s, i % s]
}

/// `s^d (ceil(n/s) - 1)`, a bound on the component degree of `p_H`.
pub fn degree_bound(n: usize, s: usize, d: u32) -> usize {
    assert!(n >= 1 && s >= 1, "n and s must be positive");
    s.pow(d) * (n.div_ceil(s) - 1)
}

/// Where a filter tap lands in the polyphase decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct TapSlot {
    /// Flat tap index within one `size x size` filter.
    pub tap: usize,
    pub coset: usize,
    /// Polyphase index `m`.
    pub m: [i64; 2],
}

/// Analysis taps `a in [0, n)^2`: `a = s m - v`, so `v = (-a) mod s`.
pub(crate) fn analysis_slots(n: usize, s: usize) -> Vec<TapSlot> {
    let si = s as i64;
    let mut out = Vec::with_capacity(n * n);
    for a1 in 0..n as i64 {
        for a2 in 0..n as i64 {
            let v = [(-a1).rem_euclid(si), (-a2).rem_euclid(si)];
            out.push(TapSlot {
                tap: (a1 * n as i64 + a2) as usize,
                coset: (v[0] * si + v[1]) as usize,
                m: [(a1 + v[0]) / si, (a2 + v[1]) / si],
            });
        }
    }
    out
}

/// Synthesis taps at spatial offset `t = b - origin`: `t = s m + v`.
pub(crate) fn synthesis_slots(q: usize, s: usize, origin: usize) -> Vec<TapSlot> {
    let si = s as i64;
    let mut out = Vec::with_capacity(q * q);
    for b1 in 0..q {
        for b2 in 0..q {
            let t = [b1 as i64 - origin as i64, b2 as i64 - origin as i64];
            let v = [t[0].rem_euclid(si), t[1].rem_euclid(si)];
            out.push(TapSlot {
                tap: b1 * q + b2,
                coset: (v[0] * si + v[1]) as usize,
                m: [t[0].div_euclid(si), t[1].div_euclid(si)],
            });
        }
    }
    out
}

#[inline]
pub(crate) fn wrap_index(m: [i64; 2], n: usize) -> usize {
    let n_i = n as i64;
    (m[0].rem_euclid(n_i) * n_i + m[1].rem_euclid(n_i)) as usize
}

/// Samples `sum_m taps^i[m] e^{-j w.m}` on `Theta_N^2` for every channel and
/// coset; output shape `N_c x s^2 x N x N`.
pub(crate) fn sample_components(
    taps: &Array3<f64>,
    slots: &[TapSlot],
    s: usize,
    fft: &Fft2,
) -> Array4<Complex64> {
    let (nc, q, _) = taps.dim();
    let n = fft.size();
    let cosets = s * s;
    let mut out = Array4::<Complex64>::zeros((nc, cosets, n, n));
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); cosets];
    for sl in slots {
        let r = sl.m[0].rem_euclid(n as i64) as usize;
        if !rows[sl.coset].contains(&r) {
            rows[sl.coset].push(r);
        }
    }
    for c in 0..nc {
        let flat = taps.index_axis(ndarray::Axis(0), c);
        let flat = flat.as_slice().expect("standard layout");
        debug_assert_eq!(flat.len(), q * q);
        for i in 0..cosets {
            let mut view = out.slice_mut(ndarray::s![c, i, .., ..]);
            let buf = view.as_slice_mut().expect("standard layout");
            for sl in slots.iter().filter(|sl| sl.coset == i) {
                buf[wrap_index(sl.m, n)] += flat[sl.tap];
            }
            fft.forward_sparse_rows(buf, &rows[i]);
        }
    }
    out
}

/// Adjoint of [`sample_components`] for real taps: given `E` with the same
/// shape, returns `2 Re sum_w E_{c,i}(w) e^{-j w.m}` at every tap.
pub(crate) fn components_adjoint(
    e: &mut Array4<Complex64>,
    slots: &[TapSlot],
    q: usize,
    fft: &Fft2,
) -> Array3<f64> {
    let (nc, cosets, n, _) = e.dim();
    let mut grad = Array3::zeros((nc, q, q));
    for c in 0..nc {
        for i in 0..cosets {
            let mut view = e.slice_mut(ndarray::s![c, i, .., ..]);
            let buf = view.as_slice_mut().expect("standard layout");
            if buf.iter().all(|z| *z == Complex64::default()) {
                continue;
            }
            fft.forward(buf);
            let mut g = grad.index_axis_mut(ndarray::Axis(0), c);
            let g = g.as_slice_mut().expect("standard layout");
            for sl in slots.iter().filter(|sl| sl.coset == i) {
                g[sl.tap] += 2.0 * buf[wrap_index(sl.m, n)].re;
            }
        }
    }
    grad
}

/// One polyphase component of one analysis filter.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyphaseComponent {
    pub channel: usize,
    pub coset: [usize; 2],
    /// Polyphase index of `taps[[0, 0]]`.
    pub offset: [i64; 2],
    /// `taps[[r, c]] = h[s (offset + (r, c)) - v]`.
    pub taps: Array2<f64>,
}

/// Splits every filter into its `s^2` polyphase components
/// `h^i[m] = h[s m - v_i]`, each stored over its own support.
pub fn polyphase_analysis(fb: &FilterBank) -> Vec<PolyphaseComponent> {
    let (s, n) = (fb.s, fb.size());
    let slots = analysis_slots(n, s);
    let mut out = Vec::with_capacity(fb.channels() * s * s);
    for c in 0..fb.channels() {
        for i in 0..s * s {
            let mine: Vec<&TapSlot> = slots.iter().filter(|sl| sl.coset == i).collect();
            let lo = [0, 1].map(|ax| mine.iter().map(|sl| sl.m[ax]).min().unwrap_or(0));
            let hi = [0, 1].map(|ax| mine.iter().map(|sl| sl.m[ax]).max().unwrap_or(-1));
            let shape = ((hi[0] - lo[0] + 1).max(0) as usize, (hi[1] - lo[1] + 1).max(0) as usize);
            let mut taps = Array2::zeros(shape);
            for sl in &mine {
                let (a1, a2) = (sl.tap / n, sl.tap % n);
                taps[[(sl.m[0] - lo[0]) as usize, (sl.m[1] - lo[1]) as usize]] =
                    fb.filters[[c, a1, a2]];
            }
            out.push(PolyphaseComponent {
                channel: c,
                coset: coset_vector(s, i),
                offset: lo,
                taps,
            });
        }
    }
    out
}

/// `H(w)` sampled on `Theta_N^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyphaseGrid {
    grid_size: usize,
    ph_degree: usize,
    /// `N_c x s^2 x N x N`; `data[[c, i, k1, k2]] = H_{c,i}(2 pi k / N)`.
    data: Array4<Complex64>,
}

impl PolyphaseGrid {
    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn ph_degree(&self) -> usize {
        self.ph_degree
    }

    pub fn data(&self) -> &Array4<Complex64> {
        &self.data
    }

    /// The `N_c x s^2` matrix at grid point `k`.
    pub fn matrix(&self, k: [usize; 2]) -> DMatrix<Complex64> {
        let (nc, cosets, _, _) = self.data.dim();
        DMatrix::from_fn(nc, cosets, |c, i| self.data[[c, i, k[0], k[1]]])
    }
}

/// Samples the polyphase matrix of `fb` on `Theta_N^2`. Requires
/// `N >= 2 m + 1` with `m = degree_bound(n, s, 2)`.
pub fn polyphase_grid(fb: &FilterBank, grid_size: usize) -> Result<PolyphaseGrid> {
    let m = fb.ph_degree();
    if grid_size < 2 * m + 1 {
        return Err(precondition(format!(
            "polyphase grid needs N >= 2m+1 = {} for p_H of degree {m}, got N = {grid_size}",
            2 * m + 1
        )));
    }
    Ok(sample_polyphase(fb, grid_size))
}

pub(crate) fn sample_polyphase(fb: &FilterBank, grid_size: usize) -> PolyphaseGrid {
    let fft = Fft2::new(grid_size);
    let slots = analysis_slots(fb.size(), fb.s);
    PolyphaseGrid {
        grid_size,
        ph_degree: fb.ph_degree(),
        data: sample_components(&fb.filters, &slots, fb.s, &fft),
    }
}

/// Gram matrix `H* H` at one grid point, from the `N_c x s^2 x N x N` layout.
pub(crate) fn gram_at(data: &Array4<Complex64>, k: [usize; 2]) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let (nc, cosets, _, _) = data.dim();
    let h = DMatrix::from_fn(nc, cosets, |c, i| data[[c, i, k[0], k[1]]]);
    let g = h.adjoint() * &h;
    (h, g)
}

/// `p_H(w) = det(H*(w) H(w))` on the grid, by LU with partial pivoting.
pub fn gram_det_grid(pg: &PolyphaseGrid) -> SampleGrid {
    let n = pg.grid_size;
    let mut values = ndarray::ArrayD::zeros(vec![n, n]);
    for k1 in 0..n {
        for k2 in 0..n {
            let (_, g) = gram_at(&pg.data, [k1, k2]);
            values[[k1, k2]] = g.lu().determinant();
        }
    }
    SampleGrid::from_values(values).expect("square grid")
}

/// Extreme eigenvalues of `H* H` over the grid: sampled lower and upper
/// frame bounds `(B, A)`.
pub fn frame_bounds(pg: &PolyphaseGrid) -> (f64, f64) {
    let n = pg.grid_size;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k1 in 0..n {
        for k2 in 0..n {
            let (_, g) = gram_at(&pg.data, [k1, k2]);
            for &ev in g.symmetric_eigenvalues().iter() {
                lo = lo.min(ev);
                hi = hi.max(ev);
            }
        }
    }
    (lo, hi)
}

/// Perfect-reconstruction verdict from `p_H` on `Theta_N^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrReport {
    /// Degree bound `m` used for `p_H`.
    pub m: usize,
    #[serde(flatten)]
    pub bound: BoundReport,
    /// Sampled frame bounds `(B, A)`.
    pub frame_bounds: (f64, f64),
}

/// Certifies perfect reconstruction: `p_H > 0` everywhere on the torus,
/// via the positivity certificate with degree `m = degree_bound(n, s, 2)`.
pub fn certify_pr(fb: &FilterBank, grid_size: usize) -> Result<BoundReport> {
    certify_pr_with(fb, grid_size, BoundConstant::Sharp).map(|r| r.bound)
}

pub fn certify_pr_with(
    fb: &FilterBank,
    grid_size: usize,
    which: BoundConstant,
) -> Result<PrReport> {
    let pg = polyphase_grid(fb, grid_size)?;
    let ph = gram_det_grid(&pg);
    let m = pg.ph_degree;
    let bound = certify_positive(&ph.stats(), m, which)?;
    Ok(PrReport {
        m,
        bound,
        frame_bounds: frame_bounds(&pg),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn degree_bounds() {
        assert_eq!(degree_bound(12, 2, 2), 20);
        assert_eq!(degree_bound(8, 2, 2), 12);
        assert_eq!(degree_bound(11, 2, 2), 20);
        assert_eq!(degree_bound(3, 3, 2), 0);
        assert_eq!(degree_bound(1, 1, 2), 0);
    }

    #[test]
    fn polyphase_of_two_by_two() {
        let f = array![[[1.0, 2.0], [3.0, 4.0]], [[0.0; 2]; 2], [[0.0; 2]; 2], [[0.0; 2]; 2]];
        let fb = FilterBank::new(2, f).unwrap();
        let comps = polyphase_analysis(&fb);
        let first: Vec<_> = comps.iter().filter(|c| c.channel == 0).collect();
        assert_eq!(first.len(), 4);
        // h[2m - v]: v = (0,0) -> h[0,0]; (0,1) -> h[0,1] at m = (0,1); ...
        let expect = [([0, 0], [0, 0], 1.0), ([0, 1], [0, 1], 2.0), ([1, 0], [1, 0], 3.0), ([1, 1], [1, 1], 4.0)];
        for (comp, (coset, offset, value)) in first.iter().zip(expect) {
            assert_eq!(comp.coset, coset);
            assert_eq!(comp.offset, offset);
            assert_eq!(comp.taps.dim(), (1, 1));
            assert_eq!(comp.taps[[0, 0]], value);
        }
    }

    #[test]
    fn polyphase_sizes() {
        let fb = FilterBank::zeros(4, 4, 2).unwrap();
        for comp in polyphase_analysis(&fb) {
            assert_eq!(comp.taps.dim(), (2, 2));
        }
        let one = FilterBank::new(1, Array3::from_elem((1, 3, 3), 1.5)).unwrap();
        let comps = polyphase_analysis(&one);
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].taps, Array2::from_elem((3, 3), 1.5));
    }

    #[test]
    fn unit_taps_bank_is_identity_like() {
        let fb = FilterBank::unit_taps(2);
        let pg = polyphase_grid(&fb, 5).unwrap();
        let ph = gram_det_grid(&pg);
        for v in ph.values().iter() {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let r = certify_pr(&fb, 5).unwrap();
        assert!(r.certified_positive);
        assert!((r.kappa - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_bank() {
        let fb = FilterBank::zeros(5, 4, 2).unwrap();
        let pg = polyphase_grid(&fb, 9).unwrap();
        assert!(pg.data().iter().all(|z| z.norm() == 0.0));
        let r = certify_pr(&fb, 9).unwrap();
        assert!(!r.certified_positive);
        assert_eq!(r.min, 0.0);
    }

    #[test]
    fn rejects_bad_banks() {
        assert!(FilterBank::zeros(3, 4, 2).is_err());
        assert!(FilterBank::new(1, Array3::zeros((1, 2, 3))).is_err());
        assert!(FilterBank::new(1, Array3::from_elem((1, 2, 2), f64::NAN)).is_err());
        let fb = FilterBank::zeros(4, 8, 2).unwrap();
        assert!(matches!(polyphase_grid(&fb, 24), Err(crate::Error::Precondition(_))));
    }
}
