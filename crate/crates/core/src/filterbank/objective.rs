//! Design objective `f(H, D) + R(H)` and, for co-design, the left-inverse
//! penalty, with analytic gradients.
//!
//! * `f = sum_c sum_w W_c(w) (|h_c(w)|^2 - D_c(w))^2`
//! * `R = alpha sum_c ||h_c||^2 + sum_w beta p_H(w)^2 - gamma log p_H(w)`
//! * `P = lambda sum_w ||G(w) H(w) - I||_F^2`
//!
//! With `E(w) = (2 beta p^2 - gamma) (H*H)^{-1} H*`, the barrier gradient is
//! `2 Re sum_w E_{i,c}(w) e^{-j w.m}` at each tap, an adjoint DFT of `E`.

use nalgebra::DMatrix;
use ndarray::{Array3, Array4};
use num_complex::Complex64;
use serde::Serialize;

use super::design::DesignSpec;
use super::synthesis::SynthesisBank;
use super::{analysis_slots, components_adjoint, sample_components, synthesis_slots, TapSlot};
use super::{wrap_index, FilterBank};
use crate::error::{argument, Error, Result};
use crate::fft::Fft2;

/// Objective value split by term.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ObjectiveParts {
    pub fit: f64,
    pub norm: f64,
    pub barrier: f64,
    pub penalty: f64,
}

impl ObjectiveParts {
    pub fn total(&self) -> f64 {
        self.fit + self.norm + self.barrier + self.penalty
    }
}

/// Value and gradients at one point.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub parts: ObjectiveParts,
    pub grad_h: Array3<f64>,
    pub grad_g: Option<Array3<f64>>,
    /// Extremes of `p_H` over the grid, when it was computed.
    pub ph_range: Option<(f64, f64)>,
}

/// The objective for one design spec, with plans reused across calls.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    spec: &'a DesignSpec,
    fft: Fft2,
    slots: Vec<TapSlot>,
    fit_rows: Vec<usize>,
}

impl<'a> Objective<'a> {
    pub fn new(spec: &'a DesignSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.grid_size;
        let mut fit_rows: Vec<usize> = (0..spec.size).map(|a| a % n).collect();
        fit_rows.sort_unstable();
        fit_rows.dedup();
        Ok(Self {
            spec,
            fft: Fft2::new(n),
            slots: analysis_slots(spec.size, spec.s),
            fit_rows,
        })
    }

    pub fn spec(&self) -> &DesignSpec {
        self.spec
    }

    /// Evaluates at analysis taps `h`, optionally with synthesis taps and the
    /// penalty weight `lambda`. A non-positive `p_H` with `gamma > 0` yields
    /// [`Error::BarrierViolation`].
    pub fn evaluate(
        &self,
        h: &Array3<f64>,
        synthesis: Option<(&SynthesisBank, f64)>,
    ) -> Result<Evaluation> {
        let sp = self.spec;
        let (nc, q, s) = (sp.channels, sp.size, sp.s);
        if h.dim() != (nc, q, q) {
            return Err(argument(format!(
                "filters have shape {:?}, spec expects ({nc}, {q}, {q})",
                h.dim()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(argument("filter taps must be finite"));
        }
        if let Some((g, _)) = synthesis {
            if g.channels() != nc || g.s() != s {
                return Err(argument("synthesis bank does not match the analysis bank"));
            }
        }
        let n = sp.grid_size;
        let mut parts = ObjectiveParts::default();
        let mut grad_h = Array3::zeros((nc, q, q));

        let mut buf = vec![Complex64::default(); n * n];
        for c in 0..nc {
            let w = sp.weights.index_axis(ndarray::Axis(0), c);
            if w.iter().all(|&x| x == 0.0) {
                continue;
            }
            let d = sp.desired.index_axis(ndarray::Axis(0), c);
            let (w, d) = (w.as_slice().unwrap(), d.as_slice().unwrap());
            buf.iter_mut().for_each(|b| *b = Complex64::default());
            for a1 in 0..q {
                for a2 in 0..q {
                    buf[wrap_index([a1 as i64, a2 as i64], n)] += h[[c, a1, a2]];
                }
            }
            self.fft.forward_sparse_rows(&mut buf, &self.fit_rows);
            for (k, f) in buf.iter_mut().enumerate() {
                let r = f.norm_sqr() - d[k];
                parts.fit += w[k] * r * r;
                *f = f.conj() * (w[k] * r);
            }
            self.fft.forward(&mut buf);
            for a1 in 0..q {
                for a2 in 0..q {
                    grad_h[[c, a1, a2]] += 4.0 * buf[wrap_index([a1 as i64, a2 as i64], n)].re;
                }
            }
        }

        if sp.alpha != 0.0 {
            parts.norm = sp.alpha * h.iter().map(|v| v * v).sum::<f64>();
            grad_h.scaled_add(2.0 * sp.alpha, h);
        }

        let use_det = sp.beta != 0.0 || sp.gamma != 0.0;
        let mut grad_g = None;
        let mut ph_range = None;
        if use_det || synthesis.is_some() {
            let hh = sample_components(h, &self.slots, s, &self.fft);
            let cosets = s * s;
            let mut e_h = Array4::<Complex64>::zeros(hh.dim());
            let syn = synthesis.map(|(g, lambda)| {
                let slots = synthesis_slots(g.size(), s, g.origin());
                let gg = sample_components(g.filters(), &slots, s, &self.fft);
                (g, lambda, slots, gg)
            });
            let mut e_g = syn.as_ref().map(|(_, _, _, gg)| Array4::<Complex64>::zeros(gg.dim()));
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k1 in 0..n {
                for k2 in 0..n {
                    let hm = DMatrix::from_fn(nc, cosets, |c, i| hh[[c, i, k1, k2]]);
                    if use_det {
                        let gram = hm.adjoint() * &hm;
                        let lu = gram.lu();
                        let p = lu.determinant().re;
                        lo = lo.min(p);
                        hi = hi.max(p);
                        if sp.gamma > 0.0 && !(p > 0.0) {
                            return Err(Error::BarrierViolation {
                                index: [k1, k2],
                                value: p,
                            });
                        }
                        parts.barrier += sp.beta * p * p;
                        if sp.gamma > 0.0 {
                            parts.barrier -= sp.gamma * p.ln();
                        }
                        let coef = 2.0 * sp.beta * p * p - sp.gamma;
                        if coef != 0.0 {
                            if let Some(inv) = lu.try_inverse() {
                                let e = inv * hm.adjoint() * Complex64::new(coef, 0.0);
                                for c in 0..nc {
                                    for i in 0..cosets {
                                        e_h[[c, i, k1, k2]] += e[(i, c)];
                                    }
                                }
                            }
                        }
                    }
                    if let (Some((_, lambda, _, gg)), Some(e_g)) = (&syn, e_g.as_mut()) {
                        let gm = DMatrix::from_fn(cosets, nc, |i, c| gg[[c, i, k1, k2]]);
                        let mut rm = &gm * &hm;
                        for i in 0..cosets {
                            rm[(i, i)] -= Complex64::new(1.0, 0.0);
                        }
                        parts.penalty += lambda * rm.iter().map(|z| z.norm_sqr()).sum::<f64>();
                        let rm_adj = rm.adjoint() * Complex64::new(*lambda, 0.0);
                        let eh = &rm_adj * &gm;
                        let eg = &hm * &rm_adj;
                        for c in 0..nc {
                            for i in 0..cosets {
                                e_h[[c, i, k1, k2]] += eh[(i, c)];
                                e_g[[c, i, k1, k2]] += eg[(c, i)];
                            }
                        }
                    }
                }
            }
            if use_det {
                ph_range = Some((lo, hi));
            }
            grad_h += &components_adjoint(&mut e_h, &self.slots, q, &self.fft);
            if let (Some((g, _, slots, _)), Some(mut e_g)) = (syn, e_g) {
                grad_g = Some(components_adjoint(&mut e_g, &slots, g.size(), &self.fft));
            }
        }

        Ok(Evaluation {
            value: parts.total(),
            parts,
            grad_h,
            grad_g,
            ph_range,
        })
    }
}

/// `(f + R, gradient)` for an analysis bank on the spec's grid.
pub fn objective(fb: &FilterBank, spec: &DesignSpec) -> Result<(f64, Array3<f64>)> {
    if fb.s() != spec.s {
        return Err(argument("bank and spec use different downsampling factors"));
    }
    let obj = Objective::new(spec)?;
    let ev = obj.evaluate(fb.filters(), None)?;
    Ok((ev.value, ev.grad_h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(nc: usize, q: usize, s: usize, n: usize) -> DesignSpec {
        DesignSpec::new(nc, q, s, n).unwrap()
    }

    #[test]
    fn all_terms_off_gives_zero() {
        let mut sp = spec(4, 4, 2, 8);
        sp.alpha = 0.0;
        sp.beta = 0.0;
        sp.gamma = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = Array3::from_shape_fn((4, 4, 4), |_| rng.gen_range(-1.0..1.0));
        let fb = FilterBank::new(2, h).unwrap();
        let (v, g) = objective(&fb, &sp).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn fit_vanishes_at_own_response() {
        let mut sp = spec(1, 3, 1, 8);
        sp.alpha = 0.0;
        sp.beta = 0.0;
        sp.gamma = 0.0;
        let h = Array3::from_shape_vec((1, 3, 3), vec![0.2, -0.4, 1.0, 0.5, 0.3, -0.1, 0.0, 0.7, 0.25]).unwrap();
        let fft = Fft2::new(8);
        let mut buf = vec![Complex64::default(); 64];
        for a in 0..3 {
            for b in 0..3 {
                buf[a * 8 + b] = h[[0, a, b]].into();
            }
        }
        fft.forward(&mut buf);
        for (k, f) in buf.iter().enumerate() {
            sp.desired[[0, k / 8, k % 8]] = f.norm_sqr();
        }
        sp.weights.fill(1.0);
        let ev = Objective::new(&sp).unwrap().evaluate(&h, None).unwrap();
        assert!(ev.parts.fit < 1e-24);
        assert!(ev.grad_h.iter().all(|g| g.abs() < 1e-10));
    }

    #[test]
    fn barrier_violation_is_signalled() {
        let sp = spec(4, 2, 2, 8);
        let h = Array3::zeros((4, 2, 2));
        let err = Objective::new(&sp).unwrap().evaluate(&h, None).unwrap_err();
        assert!(matches!(err, Error::BarrierViolation { .. }));
    }
}
