//! Wedge tilings of the frequency plane used as desired magnitude responses.
//!
//! Frequencies are split into concentric pseudo-polar (max-norm) rings and
//! each ring into angular wedges, with angles taken modulo `pi` so every
//! response is symmetric under `w -> -w`, as real filters require. Raised
//! cosine transitions make the responses a partition of unity,
//! `sum_c D_c(w) = 1`.

use std::f64::consts::PI;

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};

/// Lowpass square plus rings of angular wedges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeTiling {
    /// Wedges per ring, innermost first.
    pub wedges: Vec<usize>,
    /// Ring boundaries in `(0, 1)`, as fractions of `pi` in the max-norm.
    pub radii: Vec<f64>,
    /// Radial transition width, same units as `radii`.
    pub radial_width: f64,
    /// Angular transition width as a fraction of the wedge width.
    pub angular_width: f64,
}

impl WedgeTiling {
    /// 17 channels: lowpass, then two rings of 8 wedges.
    pub fn curvelet17() -> Self {
        Self {
            wedges: vec![8, 8],
            radii: vec![0.25, 0.5],
            radial_width: 0.1,
            angular_width: 0.5,
        }
    }

    /// 5 channels: lowpass and one ring of 4 wedges.
    pub fn wedge5() -> Self {
        Self {
            wedges: vec![4],
            radii: vec![0.4],
            radial_width: 0.15,
            angular_width: 0.5,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "curvelet17" => Ok(Self::curvelet17()),
            "wedge5" => Ok(Self::wedge5()),
            other => Err(argument(format!("unknown tiling '{other}' (curvelet17|wedge5)"))),
        }
    }

    pub fn channels(&self) -> usize {
        1 + self.wedges.iter().sum::<usize>()
    }

    fn validate(&self) -> Result<()> {
        if self.radii.len() != self.wedges.len() {
            return Err(argument("need one inner radius per ring"));
        }
        if self.wedges.iter().any(|&w| w == 0) {
            return Err(argument("every ring needs at least one wedge"));
        }
        let w = self.radial_width;
        let ok = self.radii.windows(2).all(|r| r[1] - r[0] >= w)
            && self.radii.first().is_none_or(|&r| r - w / 2.0 > 0.0)
            && self.radii.last().is_none_or(|&r| r + w / 2.0 < 1.0);
        if !(w > 0.0) || !ok {
            return Err(argument("ring transitions overlap or leave (0, 1)"));
        }
        if !(self.angular_width > 0.0 && self.angular_width <= 1.0) {
            return Err(argument("angular width must be in (0, 1]"));
        }
        Ok(())
    }

    /// `D_c(w)` for every channel at `w in (-pi, pi]^2`.
    pub fn responses_at(&self, w: [f64; 2]) -> Vec<f64> {
        let r = w[0].abs().max(w[1].abs()) / PI;
        let half = self.radial_width / 2.0;
        // outside[j]: weight of everything beyond radius j.
        let outside: Vec<f64> = self
            .radii
            .iter()
            .map(|&rj| rise((r - rj + half) / self.radial_width))
            .collect();
        let mut out = Vec::with_capacity(self.channels());
        out.push(1.0 - outside.first().copied().unwrap_or(0.0));
        let theta = w[1].atan2(w[0]).rem_euclid(PI);
        for (j, &count) in self.wedges.iter().enumerate() {
            let ring = outside[j] - outside.get(j + 1).copied().unwrap_or(0.0);
            let width = PI / count as f64;
            let t = self.angular_width * width;
            for k in 0..count {
                let center = (k as f64 + 0.5) * width;
                let u = (theta - center + PI / 2.0).rem_euclid(PI) - PI / 2.0;
                let a = rise((width / 2.0 + t / 2.0 - u.abs()) / t);
                out.push(ring * a);
            }
        }
        out
    }
}

/// Raised-cosine step: 0 below 0, 1 above 1, and `rise(x) + rise(1-x) = 1`.
fn rise(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    (1.0 - (PI * x).cos()) / 2.0
}

/// Desired responses on `Theta_N^2`, shape `N_c x N x N`, with grid point `k`
/// at `w = 2 pi k / N` wrapped to `(-pi, pi]`.
pub fn desired_from_tiling(tiling: &WedgeTiling, grid_size: usize) -> Result<Array3<f64>> {
    tiling.validate()?;
    let n = grid_size;
    let wrap = |k: usize| {
        let w = 2.0 * PI * k as f64 / n as f64;
        if w > PI {
            w - 2.0 * PI
        } else {
            w
        }
    };
    let mut out = Array3::zeros((tiling.channels(), n, n));
    for k1 in 0..n {
        for k2 in 0..n {
            // Symmetrize across the Nyquist lines.
            let a = tiling.responses_at([wrap(k1), wrap(k2)]);
            let b = tiling.responses_at([-wrap((n - k1) % n), -wrap((n - k2) % n)]);
            for (c, (x, y)) in a.into_iter().zip(b).enumerate() {
                out[[c, k1, k2]] = (x + y) / 2.0;
            }
        }
    }
    Ok(out)
}
