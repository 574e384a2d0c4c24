//! Extremal bounds for trigonometric polynomials from their uniform samples.
//!
//! Everything here is driven by the constant `C_{N,n,d}` relating the grid
//! maximum modulus to the true supremum, `||p||_inf <= C ||p||_{N^d,inf}`,
//! valid for `p` of component degree `n` sampled with `N >= 2n+1` points per
//! axis. Two forms are available:
//!
//! * [`cnd_simple`]: `(1 - 2n/N)^{-d/2}`.
//! * [`cnd_sharp`]: the `d`-th power of the normalized supremum of the
//!   absolute de la Vallée-Poussin sum `D_{n,N-n}` over the sampling lattice,
//!   computed numerically. Never larger than the simple form.
//!
//! For real polynomials the grid extrema `A >= B` give the refined upper
//! bound `(A + B + C (A - B)) / 2` and lower bound `(A + B - C (A - B)) / 2`,
//! and hence a sufficient condition for strict positivity on the dynamic
//! range `kappa = A / B`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{argument, precondition, Result};
use crate::kernel::vp_factor;
use crate::poly::GridStats;

/// Default argument tolerance of the golden-section refinement.
pub const DEFAULT_SUP_TOL: f64 = 1e-10;

/// Dense-scan resolution per lattice cell.
pub const SCAN_POINTS_PER_CELL: usize = 2048;

/// Which form of `C_{N,n,d}` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundConstant {
    #[default]
    Sharp,
    Simple,
}

impl std::str::FromStr for BoundConstant {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sharp" => Ok(Self::Sharp),
            "simple" => Ok(Self::Simple),
            other => Err(argument(format!("unknown constant '{other}' (sharp|simple)"))),
        }
    }
}

fn check_oversampled(grid_size: usize, n: usize, d: usize) -> Result<()> {
    if d == 0 {
        return Err(argument("dimension must be at least 1"));
    }
    if grid_size < 2 * n + 1 {
        return Err(precondition(format!(
            "need N >= 2n+1 = {} samples per axis, got N = {grid_size}",
            2 * n + 1
        )));
    }
    Ok(())
}

/// `(1 - 2n/N)^{-d/2}`.
pub fn cnd_simple(grid_size: usize, n: usize, d: usize) -> Result<f64> {
    check_oversampled(grid_size, n, d)?;
    let alpha = 2.0 * n as f64 / grid_size as f64;
    Ok((1.0 - alpha).powf(-(d as f64) / 2.0))
}

/// The lattice sum `S(theta) = sum_k |sin(N theta/2) sin((N-2n)(theta-theta_k)/2)
/// / sin^2((theta-theta_k)/2)|`, evaluated as
/// `(N-2n) sum_k |D_{n,N-n}(theta - theta_k)|` so the singular term at a
/// lattice point takes its limit.
pub fn lattice_vp_sum(grid_size: usize, n: usize, theta: f64) -> f64 {
    let m = grid_size - n;
    let step = 2.0 * PI / grid_size as f64;
    let s: f64 = (0..grid_size)
        .map(|k| vp_factor(n, m, theta - step * k as f64).abs())
        .sum();
    s * (grid_size - 2 * n) as f64
}

/// Sharp constant with the default refinement tolerance.
pub fn cnd_sharp(grid_size: usize, n: usize, d: usize) -> Result<f64> {
    cnd_sharp_with_tol(grid_size, n, d, DEFAULT_SUP_TOL)
}

/// `[sup_theta S(theta)]^d / (N (N - 2n))^d`.
///
/// `S` is `2 pi / N`-periodic, so the supremum is taken over one cell:
/// a dense scan followed by golden-section refinement of the best bracket
/// until the bracket is shorter than `tol`. The univariate factor is capped
/// at the simple constant, which bounds it analytically.
pub fn cnd_sharp_with_tol(grid_size: usize, n: usize, d: usize, tol: f64) -> Result<f64> {
    check_oversampled(grid_size, n, d)?;
    if !(tol > 0.0) {
        return Err(argument("tolerance must be positive"));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let f = |t: f64| lattice_vp_sum(grid_size, n, t);
    let cell = 2.0 * PI / grid_size as f64;
    let h = cell / SCAN_POINTS_PER_CELL as f64;
    let (mut best_i, mut best) = (0usize, f(0.0));
    for i in 1..=SCAN_POINTS_PER_CELL {
        let v = f(h * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let center = h * best_i as f64;
    let (mut a, mut b) = (center - h, center + h);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        }
    }
    let sup = best.max(f1).max(f2);
    let norm = (grid_size * (grid_size - 2 * n)) as f64;
    let simple = cnd_simple(grid_size, n, 1)?;
    Ok((sup / norm).clamp(1.0, simple).powi(d as i32))
}

pub fn bound_constant(grid_size: usize, n: usize, d: usize, which: BoundConstant) -> Result<f64> {
    match which {
        BoundConstant::Sharp => cnd_sharp(grid_size, n, d),
        BoundConstant::Simple => cnd_simple(grid_size, n, d),
    }
}

/// `(C + 1)/(C - 1)`, infinite when `C = 1`.
pub fn kappa_threshold(c: f64) -> f64 {
    if c <= 1.0 {
        f64::INFINITY
    } else {
        (c + 1.0) / (c - 1.0)
    }
}

fn require_real(stats: &GridStats) -> Result<()> {
    if !stats.is_real() {
        return Err(argument(format!(
            "grid is not real: max |imag| = {:e} exceeds tolerance",
            stats.max_imag
        )));
    }
    Ok(())
}

/// `C_{N,n,d} ||p||_{N^d,inf}`, an upper bound on `||p||_inf`.
pub fn upper_bound_complex(stats: &GridStats, n: usize, which: BoundConstant) -> Result<f64> {
    let c = bound_constant(stats.grid_size, n, stats.dim, which)?;
    Ok(c * stats.max_abs)
}

fn refined(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mid = a + b;
    let spread = c * (a - b);
    ((mid - spread) / 2.0, (mid + spread) / 2.0)
}

/// `(A + B + C (A - B)) / 2`, an upper bound on `max p` for real `p`.
pub fn upper_bound_real(stats: &GridStats, n: usize, which: BoundConstant) -> Result<f64> {
    require_real(stats)?;
    let c = bound_constant(stats.grid_size, n, stats.dim, which)?;
    Ok(refined(stats.max, stats.min, c).1)
}

/// `(A + B - C (A - B)) / 2`, a lower bound on `min p` for real `p`.
pub fn lower_bound_real(stats: &GridStats, n: usize, which: BoundConstant) -> Result<f64> {
    require_real(stats)?;
    let c = bound_constant(stats.grid_size, n, stats.dim, which)?;
    Ok(refined(stats.max, stats.min, c).0)
}

/// Sampled dynamic range `A / B` with `0/0 = 1`; `+inf` when `B = 0 < A`,
/// NaN when `B < 0`.
pub fn dynamic_range(max: f64, min: f64) -> f64 {
    if min > 0.0 {
        max / min
    } else if min == 0.0 && max == 0.0 {
        1.0
    } else if min == 0.0 {
        f64::INFINITY
    } else {
        f64::NAN
    }
}

/// Outcome of bounding a real polynomial from its samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    #[serde(rename = "N")]
    pub grid_size: usize,
    pub n: usize,
    pub d: usize,
    pub constant: BoundConstant,
    pub cnd_sharp: f64,
    pub cnd_simple: f64,
    #[serde(rename = "A")]
    pub max: f64,
    #[serde(rename = "B")]
    pub min: f64,
    pub upper: f64,
    pub lower: f64,
    #[serde(serialize_with = "crate::serde_float::serialize")]
    pub kappa: f64,
    #[serde(serialize_with = "crate::serde_float::serialize")]
    pub threshold_sharp: f64,
    #[serde(serialize_with = "crate::serde_float::serialize")]
    pub threshold_simple: f64,
    pub certified_positive: bool,
}

impl BoundReport {
    /// The threshold that decided the verdict.
    pub fn threshold(&self) -> f64 {
        match self.constant {
            BoundConstant::Sharp => self.threshold_sharp,
            BoundConstant::Simple => self.threshold_simple,
        }
    }
}

/// Bounds plus the positivity certificate: `p > 0` everywhere whenever the
/// sampled minimum is positive and `kappa <= (C+1)/(C-1)`.
pub fn certify_positive(stats: &GridStats, n: usize, which: BoundConstant) -> Result<BoundReport> {
    require_real(stats)?;
    let (big_n, d) = (stats.grid_size, stats.dim);
    let cnd_sharp = cnd_sharp(big_n, n, d)?;
    let cnd_simple = cnd_simple(big_n, n, d)?;
    let c = match which {
        BoundConstant::Sharp => cnd_sharp,
        BoundConstant::Simple => cnd_simple,
    };
    let (lower, upper) = refined(stats.max, stats.min, c);
    let kappa = dynamic_range(stats.max, stats.min);
    let threshold_sharp = kappa_threshold(cnd_sharp);
    let threshold_simple = kappa_threshold(cnd_simple);
    let threshold = match which {
        BoundConstant::Sharp => threshold_sharp,
        BoundConstant::Simple => threshold_simple,
    };
    Ok(BoundReport {
        grid_size: big_n,
        n,
        d,
        constant: which,
        cnd_sharp,
        cnd_simple,
        max: stats.max,
        min: stats.min,
        upper,
        lower,
        kappa,
        threshold_sharp,
        threshold_simple,
        certified_positive: stats.min > 0.0 && kappa <= threshold,
    })
}

/// Earlier sampling bounds, for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorBound {
    /// Lebesgue-constant bound; critically sampled grids `N = 2n+1`.
    Lebesgue,
    /// `1 / cos(pi n / N)` for even `N > 2n+1`, univariate.
    EhlichZeller,
    /// `sqrt((N + 2n + 1)/(N - 2n - 1))`, univariate, `N > 2n+1`.
    WunderBoche,
}

/// Constants of the prior bounds that apply to `(N, n, d)`.
pub fn prior_constants(grid_size: usize, n: usize, d: usize) -> BTreeMap<PriorBound, f64> {
    let mut out = BTreeMap::new();
    let crit = 2 * n + 1;
    if grid_size == crit && d >= 1 {
        let l = (PI + 4.0) / PI + 2.0 / PI * (crit as f64).ln();
        out.insert(PriorBound::Lebesgue, l.powi(d as i32));
    }
    if d == 1 && grid_size % 2 == 0 && grid_size > crit {
        out.insert(
            PriorBound::EhlichZeller,
            1.0 / (PI * n as f64 / grid_size as f64).cos(),
        );
    }
    if d == 1 && grid_size > crit {
        let (nn, c) = (grid_size as f64, crit as f64);
        out.insert(PriorBound::WunderBoche, ((nn + c) / (nn - c)).sqrt());
    }
    out
}

/// Applicable prior upper bounds on `||p||_inf`.
pub fn prior_bounds(stats: &GridStats, n: usize) -> BTreeMap<PriorBound, f64> {
    prior_constants(stats.grid_size, n, stats.dim)
        .into_iter()
        .map(|(k, c)| (k, c * stats.max_abs))
        .collect()
}

/// One row of the univariate operator-norm comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OpnormRow {
    pub ratio: f64,
    #[serde(rename = "N")]
    pub grid_size: usize,
    pub cnd_sharp: f64,
    pub cnd_simple: f64,
    pub ehlich_zeller: Option<f64>,
}

/// Parses `start:stop:step` into the inclusive list of ratios.
pub fn parse_ratio_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| argument(format!("bad ratio range '{spec}': {e}")))?;
    let [start, stop, step] = parts[..] else {
        return Err(argument(format!("ratio range '{spec}' is not start:stop:step")));
    };
    if !(step > 0.0) || stop < start {
        return Err(argument(format!("ratio range '{spec}' is empty or has a non-positive step")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
        .collect())
}

/// Constants versus oversampling ratio `N / 2n` for univariate degree `n`.
/// `N = round(ratio * 2n)`; ratios giving `N < 2n+1` are skipped.
pub fn opnorm_table(n: usize, ratios: &[f64]) -> Result<Vec<OpnormRow>> {
    if n == 0 {
        return Err(argument("degree must be positive for the ratio table"));
    }
    let mut rows = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let grid_size = (ratio * 2.0 * n as f64).round() as usize;
        if grid_size < 2 * n + 1 {
            continue;
        }
        rows.push(OpnormRow {
            ratio,
            grid_size,
            cnd_sharp: cnd_sharp(grid_size, n, 1)?,
            cnd_simple: cnd_simple(grid_size, n, 1)?,
            ehlich_zeller: prior_constants(grid_size, n, 1)
                .get(&PriorBound::EhlichZeller)
                .copied(),
        });
    }
    Ok(rows)
}

/// Writes the table as CSV with header `ratio,N,cnd_sharp,cnd_simple,ehlich_zeller`.
pub fn write_opnorm_csv<W: Write>(rows: &[OpnormRow], mut out: W) -> Result<()> {
    writeln!(out, "ratio,N,cnd_sharp,cnd_simple,ehlich_zeller")?;
    for r in rows {
        let ez = r.ehlich_zeller.map(|v| format!("{v:.12}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{:.12},{:.12},{}",
            r.ratio, r.grid_size, r.cnd_sharp, r.cnd_simple, ez
        )?;
    }
    Ok(())
}
