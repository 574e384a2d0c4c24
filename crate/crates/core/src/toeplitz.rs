//! Eigenvalue enclosures for Hermitian Toeplitz and block-Toeplitz
//! (Toeplitz blocks) matrices from samples of their symbol.
//!
//! A matrix with entries `X[i, j] = x_{i-j}` (two-level indices for the
//! block case) has symbol `sum_k x_k e^{j k . theta}`. Every eigenvalue of
//! every finite section lies between the infimum and supremum of the symbol,
//! which the sampled bounds enclose.

use ndarray::ArrayD;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::{lower_bound_real, upper_bound_real, BoundConstant};
use crate::error::{argument, Result};
use crate::poly::TrigPoly;

/// Generators `x_k`, `k in {-n..n}^dim`, of a Toeplitz (`dim = 1`) or
/// block-Toeplitz (`dim = 2`) matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzSpec {
    symbol: TrigPoly,
}

/// Enclosing interval for the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRange {
    pub lower: f64,
    pub upper: f64,
}

impl ToeplitzSpec {
    /// `generators` has shape `(2n+1)^dim`; entry `k + n` holds `x_k`.
    pub fn new(dim: usize, degree: usize, generators: ArrayD<Complex64>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(argument(format!(
                "Toeplitz generators must be 1- or 2-level, got dim = {dim}"
            )));
        }
        Ok(Self {
            symbol: TrigPoly::new(dim, degree, generators)?,
        })
    }

    /// Univariate generators from `x_{-n}, ..., x_n`.
    pub fn from_slice(generators: &[Complex64]) -> Result<Self> {
        if generators.len() % 2 == 0 {
            return Err(argument("generator list must have odd length 2n+1"));
        }
        let n = generators.len() / 2;
        Self::new(1, n, ArrayD::from_shape_vec(vec![2 * n + 1], generators.to_vec()).unwrap())
    }

    /// Real symmetric univariate generators `x_0, x_1, ..., x_n`.
    pub fn symmetric(diagonals: &[f64]) -> Result<Self> {
        if diagonals.is_empty() {
            return Err(argument("need at least the main diagonal"));
        }
        let n = diagonals.len() - 1;
        let gens: Vec<Complex64> = (0..=2 * n)
            .map(|i| Complex64::new(diagonals[(i as i64 - n as i64).unsigned_abs() as usize], 0.0))
            .collect();
        Self::from_slice(&gens)
    }

    pub fn dim(&self) -> usize {
        self.symbol.dim()
    }

    pub fn degree(&self) -> usize {
        self.symbol.degree()
    }

    /// `x_k`.
    pub fn generator(&self, k: &[i64]) -> Complex64 {
        self.symbol.coeff(k)
    }

    /// `x_{-k} = conj(x_k)` for all `k`.
    pub fn is_hermitian(&self) -> bool {
        self.symbol.is_real()
    }

    /// The symbol `sum_k x_k e^{j k . theta}`.
    pub fn symbol(&self) -> &TrigPoly {
        &self.symbol
    }

    pub fn into_symbol(self) -> TrigPoly {
        self.symbol
    }
}

impl From<TrigPoly> for ToeplitzSpec {
    fn from(symbol: TrigPoly) -> Self {
        Self { symbol }
    }
}

/// Bounds on all eigenvalues of every section of the matrix, from `N`
/// (resp. `N^2`) symbol samples with the sharp constant.
pub fn eigen_range(spec: &ToeplitzSpec, grid_size: usize) -> Result<EigenRange> {
    eigen_range_with(spec, grid_size, BoundConstant::Sharp)
}

pub fn eigen_range_with(
    spec: &ToeplitzSpec,
    grid_size: usize,
    which: BoundConstant,
) -> Result<EigenRange> {
    if !spec.is_hermitian() {
        return Err(argument("generators are not Hermitian; the symbol is not real"));
    }
    let stats = spec.symbol.sample_stats(grid_size)?;
    let n = spec.degree();
    Ok(EigenRange {
        lower: lower_bound_real(&stats, n, which)?,
        upper: upper_bound_real(&stats, n, which)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_symbol() {
        let spec = ToeplitzSpec::symmetric(&[1.0]).unwrap();
        assert_eq!(spec.symbol().eval(&[0.7]).unwrap(), Complex64::new(1.0, 0.0));
        for big_n in [1, 4, 33] {
            let r = eigen_range(&spec, big_n).unwrap();
            assert_eq!((r.lower, r.upper), (1.0, 1.0));
        }
    }

    #[test]
    fn tridiagonal_symbol() {
        let spec = ToeplitzSpec::symmetric(&[2.0, 1.0]).unwrap();
        for t in [0.0, 0.4, 2.0, 3.1] {
            let v = spec.symbol().eval(&[t]).unwrap();
            assert!((v.re - (2.0 + 2.0 * f64::cos(t))).abs() < 1e-14 && v.im.abs() < 1e-14);
        }
        let r = eigen_range(&spec, 16).unwrap();
        assert!(r.lower <= 0.0 && r.upper >= 4.0);
    }

    #[test]
    fn rejects_non_hermitian_and_bad_dims() {
        let c = |re, im| Complex64::new(re, im);
        let spec = ToeplitzSpec::from_slice(&[c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(!spec.is_hermitian());
        assert!(eigen_range(&spec, 8).is_err());
        let gens = ArrayD::zeros(vec![3, 3, 3]);
        assert!(ToeplitzSpec::new(3, 1, gens).is_err());
        assert!(ToeplitzSpec::from_slice(&[c(1.0, 0.0), c(1.0, 0.0)]).is_err());
    }
}
