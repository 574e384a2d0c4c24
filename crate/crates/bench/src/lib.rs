//! Fixtures shared by the benchmarks.

use ndarray::Array3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trigbound_core::filterbank::FilterBank;
use trigbound_core::TrigPoly;

/// Real polynomial with uniform random coefficients and a positive offset.
pub fn random_real_poly(dim: usize, degree: usize, seed: u64) -> TrigPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = TrigPoly::from_fn(dim, degree, |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    TrigPoly::from_fn(dim, degree, |k| {
        let neg: Vec<i64> = k.iter().map(|x| -x).collect();
        let c = (raw.coeff(k) + raw.coeff(&neg).conj()) / 2.0;
        if k.iter().all(|&x| x == 0) {
            c + 4.0
        } else {
            c
        }
    })
}

pub fn random_bank(channels: usize, size: usize, s: usize, seed: u64) -> FilterBank {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taps = Array3::from_shape_fn((channels, size, size), |_| rng.gen_range(-1.0..1.0));
    FilterBank::new(s, taps).expect("valid bank")
}
