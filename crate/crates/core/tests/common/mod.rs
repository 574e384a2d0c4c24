#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use trigbound_core::filterbank::{DesignSpec, Objective, SynthesisBank};
use trigbound_core::kernel::interpolate;
use trigbound_core::{
    certify_positive, eigen_range, lower_bound_real, upper_bound_real, BoundConstant, Kernel,
    ToeplitzSpec, TrigPoly,
};

/// `4.8 + sum_k a_k sin(k t) + b_k cos(k t)`, degree 8.
pub const EXAMPLE_SIN: [f64; 8] = [0.4, 1.0, 2.2, 1.9, -1.0, 1.0, -0.2, -0.1];
pub const EXAMPLE_COS: [f64; 8] = [0.4, 0.1, 1.5, 0.8, 0.1, 0.4, 0.3, 1.5];

pub fn example_poly() -> TrigPoly {
    TrigPoly::from_real_fourier(4.8, &EXAMPLE_COS, &EXAMPLE_SIN).unwrap()
}

pub fn example_direct(t: f64) -> f64 {
    4.8 + (0..8)
        .map(|i| {
            let k = (i + 1) as f64;
            EXAMPLE_SIN[i] * (k * t).sin() + EXAMPLE_COS[i] * (k * t).cos()
        })
        .sum::<f64>()
}

/// Min and max of `f` over `points` equispaced samples of `[0, 2 pi)`.
pub fn dense_extrema(points: usize, f: impl Fn(f64) -> f64) -> (f64, f64) {
    (0..points)
        .map(|i| f(2.0 * PI * i as f64 / points as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

/// Real polynomial with Gaussian coefficients, symmetrized.
pub fn random_real_poly<R: Rng>(rng: &mut R, dim: usize, degree: usize, offset: f64) -> TrigPoly {
    let raw = TrigPoly::from_fn(dim, degree, |_| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    TrigPoly::from_fn(dim, degree, |k| {
        let neg: Vec<i64> = k.iter().map(|x| -x).collect();
        let mut c = (raw.coeff(k) + raw.coeff(&neg).conj()) / 2.0;
        if k.iter().all(|&x| x == 0) {
            c += offset;
        }
        c
    })
}

/// Outcome of [`bound_fuzz`].
#[derive(Debug, Default)]
pub struct BoundFuzz {
    /// Bounds that failed to enclose the dense-grid extrema.
    pub violations: usize,
    /// Certificates issued for polynomials with a non-positive dense sample.
    pub false_positives: usize,
    pub certified: usize,
}

/// Random real polynomials of dimension 1 to 3 and degree up to 5, bounded
/// from a random grid and checked against a grid 64 points denser.
pub fn bound_fuzz(seed: u64, count: usize) -> BoundFuzz {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = BoundFuzz::default();
    for _ in 0..count {
        let d = rng.gen_range(1..=3);
        let n = rng.gen_range(0..=5);
        let offset = rng.gen_range(0.0..12.0);
        let p = random_real_poly(&mut rng, d, n, offset);
        let big_n = rng.gen_range(2 * n + 1..=4 * n + 8);
        let stats = p.sample_stats(big_n).unwrap();
        let dense = p.sample_stats(big_n + 64).unwrap();
        for which in [BoundConstant::Sharp, BoundConstant::Simple] {
            let lb = lower_bound_real(&stats, n, which).unwrap();
            let ub = upper_bound_real(&stats, n, which).unwrap();
            let tol = 1e-9 * dense.max_abs.max(1.0);
            if lb > dense.min + tol || ub < dense.max - tol {
                tally.violations += 1;
            }
            if certify_positive(&stats, n, which).unwrap().certified_positive {
                tally.certified += 1;
                if dense.min <= 0.0 {
                    tally.false_positives += 1;
                }
            }
        }
    }
    tally
}

/// Largest relative error of Dirichlet and de la Vallée-Poussin
/// interpolation against direct evaluation, over random complex
/// polynomials in one to three variables.
pub fn interpolation_fuzz(seed: u64, count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let d = rng.gen_range(1..=3);
        let n = rng.gen_range(0..=4);
        let m = n + rng.gen_range(1..=3);
        let p = TrigPoly::from_fn(d, n, |_| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let g = p.sample_uniform(n + m + 1 + rng.gen_range(0..3)).unwrap();
        let th: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let direct = p.eval(&th).unwrap();
        for kernel in [Kernel::Dirichlet { m }, Kernel::ValleePoussin { m }] {
            let v = interpolate(&g, n, kernel, &th).unwrap();
            worst = worst.max((v - direct).norm() / direct.norm().max(1.0));
        }
    }
    worst
}

/// Dense matrix with `X[i, j] = x_{i-j}`; for two levels the row index is
/// `i = i1 * order + i2`.
pub fn materialize(spec: &ToeplitzSpec, order: usize) -> DMatrix<Complex64> {
    let n = spec.degree() as i64;
    let gen = |k: &[i64]| {
        if k.iter().all(|x| x.abs() <= n) {
            spec.generator(k)
        } else {
            Complex64::default()
        }
    };
    match spec.dim() {
        1 => DMatrix::from_fn(order, order, |i, j| gen(&[i as i64 - j as i64])),
        _ => {
            let size = order * order;
            DMatrix::from_fn(size, size, |r, c| {
                let (i1, i2) = ((r / order) as i64, (r % order) as i64);
                let (j1, j2) = ((c / order) as i64, (c % order) as i64);
                gen(&[i1 - j1, i2 - j2])
            })
        }
    }
}

pub fn eigenvalues(m: DMatrix<Complex64>) -> Vec<f64> {
    m.symmetric_eigenvalues().iter().copied().collect()
}

/// Eigenvalues of random Hermitian Toeplitz and BTTB matrices that fall
/// outside the enclosure computed from their symbol.
pub fn enclosure_fuzz(seed: u64, count: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..count {
        let d = rng.gen_range(1..=2);
        let n = rng.gen_range(1..=4);
        let offset = rng.gen_range(-2.0..2.0);
        let spec = ToeplitzSpec::from(random_real_poly(&mut rng, d, n, offset));
        assert!(spec.is_hermitian());
        let r = eigen_range(&spec, 8 * n).unwrap();
        let tol = 1e-9 * (r.upper.abs() + r.lower.abs() + 1.0);
        for ev in eigenvalues(materialize(&spec, 8)) {
            if ev < r.lower - tol || ev > r.upper + tol {
                violations += 1;
            }
        }
    }
    violations
}

/// Relative error between the analytic gradient and central differences
/// over 12 random coordinates of `h` and, when given, of `g`.
pub fn finite_difference_check(
    sp: &DesignSpec,
    h: &Array3<f64>,
    g: Option<(&SynthesisBank, f64)>,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let obj = Objective::new(sp).unwrap();
    let ev = obj.evaluate(h, g).unwrap();
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for _ in 0..12 {
        if let (Some((bank, lambda)), true) = (g, rng.gen_bool(0.4)) {
            let mut gp = bank.clone();
            let idx = rng.gen_range(0..gp.filters().len());
            let x = gp.filters().as_slice().unwrap()[idx];
            let eps = 1e-5 * x.abs().max(0.1);
            gp.filters_mut().as_slice_mut().unwrap()[idx] = x + eps;
            let up = obj.evaluate(h, Some((&gp, lambda))).unwrap().value;
            gp.filters_mut().as_slice_mut().unwrap()[idx] = x - eps;
            let down = obj.evaluate(h, Some((&gp, lambda))).unwrap().value;
            numeric.push((up - down) / (2.0 * eps));
            analytic.push(ev.grad_g.as_ref().unwrap().as_slice().unwrap()[idx]);
        } else {
            let mut hp = h.clone();
            let idx = rng.gen_range(0..hp.len());
            let x = hp.as_slice().unwrap()[idx];
            let eps = 1e-5 * x.abs().max(0.1);
            hp.as_slice_mut().unwrap()[idx] = x + eps;
            let up = obj.evaluate(&hp, g).unwrap().value;
            hp.as_slice_mut().unwrap()[idx] = x - eps;
            let down = obj.evaluate(&hp, g).unwrap().value;
            numeric.push((up - down) / (2.0 * eps));
            analytic.push(ev.grad_h.as_slice().unwrap()[idx]);
        }
    }
    let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = numeric.iter().map(|b| b * b).sum::<f64>().sqrt();
    diff / norm.max(1e-12)
}

/// Worst finite-difference error over `count` random design
/// configurations, half of them with a synthesis bank in the objective.
pub fn gradient_fuzz(seed: u64, count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let s = rng.gen_range(1..=2);
        let nc = s * s + rng.gen_range(0..3);
        let n = rng.gen_range(s..=5);
        let big_n = rng.gen_range(8..=14);
        let mut sp = DesignSpec::new(nc, n, s, big_n).unwrap();
        sp.alpha = rng.gen_range(0.0..2.0);
        sp.beta = rng.gen_range(0.0..20.0);
        sp.gamma = rng.gen_range(0.0..2.0);
        for c in 0..nc {
            if rng.gen_bool(0.7) {
                let d = Array2::from_shape_fn((big_n, big_n), |_| rng.gen_range(0.0..1.0));
                sp.set_desired(c, &d).unwrap();
            }
        }
        let h = Array3::from_shape_fn((nc, n, n), |_| rng.gen_range(-1.0..1.0));
        let q = rng.gen_range(1..=5);
        let g = if rng.gen_bool(0.5) {
            let origin = rng.gen_range(0..q);
            let taps = Array3::from_shape_fn((nc, q, q), |_| rng.gen_range(-1.0..1.0));
            Some(SynthesisBank::new(s, origin, taps).unwrap())
        } else {
            None
        };
        worst = worst.max(finite_difference_check(&sp, &h, g.as_ref().map(|g| (g, 1.7)), &mut rng));
    }
    worst
}
