//! Dirichlet and de la Vallée-Poussin kernels and periodic interpolation from
//! uniform samples.
//!
//! Both kernels have removable singularities at multiples of `2 pi`. When
//! `|sin(t/2)| < SINGULAR_TOL` the factors switch to their second-order
//! expansion about the nearest lattice point.

use std::f64::consts::PI;

use ndarray::Dimension;
use num_complex::Complex64;

use crate::error::{argument, precondition, Result};
use crate::poly::SampleGrid;

pub const SINGULAR_TOL: f64 = 1e-6;

/// Reduces an angle to `(-pi, pi]`.
#[inline]
fn wrap(t: f64) -> f64 {
    let r = (t + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// One univariate Dirichlet factor `sin((2n+1)t/2) / sin(t/2)`.
#[inline]
pub fn dirichlet_factor(n: usize, t: f64) -> f64 {
    let a = (2 * n + 1) as f64;
    let u = wrap(t);
    let s = (u / 2.0).sin();
    if s.abs() < SINGULAR_TOL {
        a * (1.0 - (a * a - 1.0) * u * u / 24.0)
    } else {
        (a * u / 2.0).sin() / s
    }
}

/// `D_n^d(theta) = prod_i sin((2n+1) theta_i / 2) / sin(theta_i / 2)`.
pub fn dirichlet_kernel(n: usize, theta: &[f64]) -> f64 {
    theta.iter().map(|&t| dirichlet_factor(n, t)).product()
}

/// One univariate de la Vallée-Poussin factor
/// `sin((m+n)t/2) sin((m-n)t/2) / ((m-n) sin^2(t/2))`. Requires `m > n`.
#[inline]
pub fn vp_factor(n: usize, m: usize, t: f64) -> f64 {
    debug_assert!(m > n);
    let hi = (m + n) as f64;
    let lo = (m - n) as f64;
    let u = wrap(t);
    let s = (u / 2.0).sin();
    if s.abs() < SINGULAR_TOL {
        hi * (1.0 - (hi * hi + lo * lo - 2.0) * u * u / 24.0)
    } else {
        (hi * u / 2.0).sin() * (lo * u / 2.0).sin() / (lo * s * s)
    }
}

/// `D_{n,m}^d(theta)`, the average of the Dirichlet kernels `D_l`,
/// `n <= l < m`, in factored form. With `n = 0` this is the Fejér kernel.
pub fn vp_kernel(n: usize, m: usize, theta: &[f64]) -> Result<f64> {
    if m <= n {
        return Err(argument(format!(
            "de la Vallée-Poussin kernel needs m > n (got n = {n}, m = {m})"
        )));
    }
    Ok(theta.iter().map(|&t| vp_factor(n, m, t)).product())
}

/// Interpolation kernel choice for [`interpolate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `D_m^d`.
    Dirichlet { m: usize },
    /// `D_{n,m}^d` with `n` the polynomial degree.
    ValleePoussin { m: usize },
}

impl Kernel {
    fn order(&self) -> usize {
        match *self {
            Kernel::Dirichlet { m } | Kernel::ValleePoussin { m } => m,
        }
    }

    /// Smallest grid on which the interpolation identity holds. `D_m` carries
    /// frequency `m`, which aliases onto `-n` when `N = n + m`.
    fn min_grid(&self, n: usize) -> usize {
        match *self {
            Kernel::Dirichlet { m } => n + m + 1,
            Kernel::ValleePoussin { m } => n + m,
        }
    }

    fn factor(&self, n: usize, t: f64) -> f64 {
        match *self {
            Kernel::Dirichlet { m } => dirichlet_factor(m, t),
            Kernel::ValleePoussin { m } => vp_factor(n, m, t),
        }
    }
}

/// Evaluates a degree-`n` polynomial at `theta` from its samples:
/// `N^{-d} sum_k p(theta_k) K(theta - theta_k)`.
///
/// Exact (up to rounding) when the samples come from a polynomial of
/// degree at most `n` and `m > n`, on grids with `N >= n + m` for the
/// de la Vallée-Poussin kernel and `N >= n + m + 1` for the Dirichlet kernel.
pub fn interpolate(
    samples: &SampleGrid,
    n: usize,
    kernel: Kernel,
    theta: &[f64],
) -> Result<Complex64> {
    let d = samples.dim();
    if theta.len() != d {
        return Err(argument(format!(
            "point has {} coordinates, grid has dimension {d}",
            theta.len()
        )));
    }
    let m = kernel.order();
    if m <= n {
        return Err(argument(format!("kernel order m = {m} must exceed degree n = {n}")));
    }
    let big_n = samples.grid_size();
    let need = kernel.min_grid(n);
    if big_n < need {
        return Err(precondition(format!(
            "interpolation with {kernel:?} needs N >= {need}, got N = {big_n}"
        )));
    }
    let step = 2.0 * PI / big_n as f64;
    let table: Vec<Vec<f64>> = theta
        .iter()
        .map(|&t| {
            (0..big_n)
                .map(|k| kernel.factor(n, t - step * k as f64))
                .collect()
        })
        .collect();
    let mut acc = Complex64::default();
    for (idx, v) in samples.values().indexed_iter() {
        let w: f64 = idx
            .slice()
            .iter()
            .enumerate()
            .map(|(ax, &k)| table[ax][k])
            .product();
        acc += v * w;
    }
    Ok(acc / (big_n as f64).powi(d as i32))
}
