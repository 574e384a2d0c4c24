//! Filter bank design by Adam on the sampled objective.

use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::objective::{Evaluation, Objective, ObjectiveParts};
use super::synthesis::{polish_pair, refit_synthesis, synthesis_residual, SynthesisBank};
use super::tiling::{desired_from_tiling, WedgeTiling};
use super::FilterBank;
use crate::error::{argument, Error, Result};
use crate::fft::Fft2;

/// Everything the objective needs: sizes, targets, weights and tuning.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpec {
    pub channels: usize,
    /// Analysis filters are `size x size`.
    pub size: usize,
    pub s: usize,
    /// Design grid `Theta_N^2`.
    pub grid_size: usize,
    /// `D_c(w)`, shape `N_c x N x N`.
    pub desired: Array3<f64>,
    /// `W_c(w)`, shape `N_c x N x N`; all zero for channels without a target.
    pub weights: Array3<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub iters: usize,
    pub learning_rate: f64,
    pub penalty: PenaltySchedule,
    pub seed: u64,
}

/// Weight `lambda(i)` of the left-inverse penalty at iteration `i >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum PenaltySchedule {
    /// `log2(max(i, 2))`.
    #[default]
    Log2,
    Constant(f64),
}

impl PenaltySchedule {
    pub fn lambda(&self, iteration: usize) -> f64 {
        match *self {
            PenaltySchedule::Log2 => (iteration.max(2) as f64).log2(),
            PenaltySchedule::Constant(v) => v,
        }
    }
}

/// How starting filters are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    /// Central `n x n` crop of the zero-phase impulse response with
    /// magnitude `sqrt(D_c)`, plus seeded normal noise of standard deviation
    /// `1e-3`; channels without a target start random.
    #[default]
    Idft,
    /// Independent normal taps with standard deviation `1/n`.
    Random,
}

/// Starting point of a design run.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Bank(FilterBank),
    Strategy(InitStrategy),
}

impl DesignSpec {
    /// Spec with no targets and the default tuning `alpha = gamma = 1`,
    /// `beta = 10`, 5000 iterations at learning rate `1e-2`.
    pub fn new(channels: usize, size: usize, s: usize, grid_size: usize) -> Result<Self> {
        let spec = Self {
            channels,
            size,
            s,
            grid_size,
            desired: Array3::zeros((channels, grid_size, grid_size)),
            weights: Array3::zeros((channels, grid_size, grid_size)),
            alpha: 1.0,
            beta: 10.0,
            gamma: 1.0,
            iters: 5000,
            learning_rate: 1e-2,
            penalty: PenaltySchedule::Log2,
            seed: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Targets from a wedge tiling with unit weights on every channel.
    pub fn from_tiling(tiling: &WedgeTiling, size: usize, s: usize, grid_size: usize) -> Result<Self> {
        let mut spec = Self::new(tiling.channels(), size, s, grid_size)?;
        spec.desired = desired_from_tiling(tiling, grid_size)?;
        spec.weights.fill(1.0);
        Ok(spec)
    }

    /// Sets `D_c` and unit weights for one channel.
    pub fn set_desired(&mut self, channel: usize, desired: &Array2<f64>) -> Result<()> {
        let n = self.grid_size;
        if channel >= self.channels || desired.dim() != (n, n) {
            return Err(argument("desired response has the wrong channel or shape"));
        }
        self.desired.index_axis_mut(ndarray::Axis(0), channel).assign(desired);
        self.weights.index_axis_mut(ndarray::Axis(0), channel).fill(1.0);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let (nc, n) = (self.channels, self.grid_size);
        if self.s == 0 || self.size == 0 || n == 0 {
            return Err(argument("s, filter size and grid size must be positive"));
        }
        if nc < self.s * self.s {
            return Err(argument(format!("need at least s^2 = {} channels", self.s * self.s)));
        }
        if self.desired.dim() != (nc, n, n) || self.weights.dim() != (nc, n, n) {
            return Err(argument("desired/weights must have shape N_c x N x N"));
        }
        let bad = |v: &f64| !v.is_finite() || *v < 0.0;
        if self.desired.iter().any(bad) || self.weights.iter().any(bad) {
            return Err(argument("desired responses and weights must be finite and non-negative"));
        }
        if [self.alpha, self.beta, self.gamma].iter().any(bad) {
            return Err(argument("alpha, beta, gamma must be finite and non-negative"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(argument("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// Updates the moments with `grad` and returns the step to subtract.
    pub fn step(&mut self, grad: &[f64]) -> Vec<f64> {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut out = Vec::with_capacity(grad.len());
        for ((m, v), &g) in self.m.iter_mut().zip(self.v.iter_mut()).zip(grad) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            out.push(self.learning_rate * (*m / c1) / ((*v / c2).sqrt() + self.eps));
        }
        out
    }
}

/// Outcome of [`design`].
#[derive(Debug, Clone)]
pub struct DesignResult {
    pub bank: FilterBank,
    /// Objective after every iteration.
    pub log: Vec<f64>,
    pub parts: ObjectiveParts,
    /// Re-initializations needed to start inside the barrier.
    pub restarts: usize,
    /// Step halvings caused by barrier violations.
    pub backtracks: usize,
}

/// Outcome of [`design_with_synthesis`].
#[derive(Debug, Clone)]
pub struct CoDesignResult {
    pub analysis: FilterBank,
    pub synthesis: SynthesisBank,
    pub log: Vec<f64>,
    pub parts: ObjectiveParts,
    pub restarts: usize,
    pub backtracks: usize,
    /// `max_w ||G H - I||_F^2` on the design grid straight out of the optimizer.
    pub residual_before_refit: f64,
    /// The same for the returned pair.
    pub residual: f64,
    /// Whether the analysis taps were moved by the joint polish.
    pub polished: bool,
    /// Frobenius norm of the change the polish made to the analysis taps.
    pub analysis_change: f64,
    /// Set when `residual` misses [`RESIDUAL_TARGET`].
    pub warning: Option<String>,
}

/// Per-point left-inverse residual the co-design aims for.
pub const RESIDUAL_TARGET: f64 = 1e-7;
const POLISH_STEPS: usize = 200;

const MAX_RESTARTS: usize = 5;
/// Standard deviation of the seeded noise added to inverse-DFT starts.
const IDFT_JITTER: f64 = 1e-3;
const MAX_HALVINGS: usize = 60;

fn initial_filters(spec: &DesignSpec, strategy: InitStrategy, rng: &mut ChaCha8Rng) -> Array3<f64> {
    let (nc, q, n) = (spec.channels, spec.size, spec.grid_size);
    let sigma = 1.0 / q as f64;
    let mut h = Array3::from_shape_simple_fn((nc, q, q), || sigma * rng.sample::<f64, _>(StandardNormal));
    if strategy == InitStrategy::Random {
        return h;
    }
    let fft = Fft2::new(n);
    let center = ((q - 1) / 2) as i64;
    for c in 0..nc {
        if spec.weights.index_axis(ndarray::Axis(0), c).iter().all(|&w| w == 0.0) {
            continue;
        }
        let d = spec.desired.index_axis(ndarray::Axis(0), c);
        let mut buf: Vec<Complex64> = d.iter().map(|&v| Complex64::new(v.sqrt(), 0.0)).collect();
        fft.inverse(&mut buf);
        let norm = (n * n) as f64;
        for a1 in 0..q {
            for a2 in 0..q {
                let t = [a1 as i64 - center, a2 as i64 - center];
                let jitter: f64 = rng.sample(StandardNormal);
                h[[c, a1, a2]] = buf[super::wrap_index(t, n)].re / norm + IDFT_JITTER * jitter;
            }
        }
    }
    h
}

fn is_retryable(e: &Error) -> bool {
    matches!(e, Error::BarrierViolation { .. })
}

struct Runner<'a> {
    objective: Objective<'a>,
    nh: usize,
    synthesis: Option<SynthesisBank>,
}

impl Runner<'_> {
    fn eval(&self, x: &[f64], lambda: f64) -> Result<Evaluation> {
        let sp = self.objective.spec();
        let h = Array3::from_shape_vec((sp.channels, sp.size, sp.size), x[..self.nh].to_vec())
            .expect("parameter length");
        let syn = self.synthesis.as_ref().map(|g| {
            let mut g = g.clone();
            let q = g.size();
            g.filters_mut()
                .assign(&Array3::from_shape_vec((sp.channels, q, q), x[self.nh..].to_vec()).unwrap());
            g
        });
        let ev = self.objective.evaluate(&h, syn.as_ref().map(|g| (g, lambda)))?;
        if !ev.value.is_finite() {
            return Err(Error::Numerical("objective is not finite".into()));
        }
        Ok(ev)
    }

    fn gradient(ev: &Evaluation) -> Vec<f64> {
        let mut g: Vec<f64> = ev.grad_h.iter().copied().collect();
        if let Some(gg) = &ev.grad_g {
            g.extend(gg.iter().copied());
        }
        g
    }

    /// Adam from `x`; returns the final point, its evaluation, the log and
    /// the number of halvings.
    fn run(&self, mut x: Vec<f64>, mut ev: Evaluation) -> Result<(Vec<f64>, Evaluation, Vec<f64>, usize)> {
        let sp = self.objective.spec();
        let mut adam = Adam::new(x.len(), sp.learning_rate);
        let mut log = Vec::with_capacity(sp.iters);
        let mut backtracks = 0;
        for it in 1..=sp.iters {
            let step = adam.step(&Self::gradient(&ev));
            let next_lambda = sp.penalty.lambda(it + 1);
            let mut scale = 1.0;
            let mut halvings = 0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&step).map(|(xi, si)| xi - scale * si).collect();
                match self.eval(&trial, next_lambda) {
                    Ok(e) => {
                        x = trial;
                        ev = e;
                        break;
                    }
                    Err(e) if is_retryable(&e) || matches!(e, Error::Numerical(_)) => {
                        halvings += 1;
                        backtracks += 1;
                        if halvings > MAX_HALVINGS {
                            return Err(Error::Numerical(format!(
                                "no feasible step at iteration {it}: {e}"
                            )));
                        }
                        scale /= 2.0;
                    }
                    Err(e) => return Err(e),
                }
            }
            log.push(ev.value);
        }
        Ok((x, ev, log, backtracks))
    }
}

/// Starting parameters inside the barrier: the strategy's filters, scaled up
/// by 2 (and redrawn, for random starts) on each failed attempt.
fn start(
    runner: &Runner<'_>,
    init: &Init,
    extra: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<f64>, Evaluation, usize)> {
    let sp = runner.objective.spec();
    let lambda = sp.penalty.lambda(1);
    let mut last = None;
    for attempt in 0..=MAX_RESTARTS {
        let base = match init {
            Init::Bank(fb) => {
                if fb.filters().dim() != (sp.channels, sp.size, sp.size) || fb.s() != sp.s {
                    return Err(argument("initial bank does not match the spec"));
                }
                fb.filters().clone()
            }
            Init::Strategy(st) => initial_filters(sp, *st, rng),
        };
        let factor = 2f64.powi(attempt as i32);
        let mut x: Vec<f64> = base.iter().map(|v| v * factor).collect();
        x.extend_from_slice(extra);
        match runner.eval(&x, lambda) {
            Ok(ev) => return Ok((x, ev, attempt)),
            Err(e) if is_retryable(&e) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Numerical(format!(
        "barrier violated at initialization after {MAX_RESTARTS} rescaled restarts: {}",
        last.expect("at least one attempt")
    )))
}

/// Minimizes `f(H, D) + R(H)` over the analysis taps with Adam.
pub fn design(spec: &DesignSpec, init: Init) -> Result<DesignResult> {
    let objective = Objective::new(spec)?;
    let nh = spec.channels * spec.size * spec.size;
    let runner = Runner {
        objective,
        nh,
        synthesis: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (x, ev, restarts) = start(&runner, &init, &[], &mut rng)?;
    let (x, ev, log, backtracks) = runner.run(x, ev)?;
    let h = Array3::from_shape_vec((spec.channels, spec.size, spec.size), x).unwrap();
    Ok(DesignResult {
        bank: FilterBank::new(spec.s, h)?,
        log,
        parts: ev.parts,
        restarts,
        backtracks,
    })
}

/// Jointly designs analysis taps and `q x q` FIR synthesis taps, adding the
/// penalty `lambda(i) sum_w ||G H - I||_F^2`, then refits the synthesis
/// taps by least squares. If the refit leaves a residual of at least
/// [`RESIDUAL_TARGET`], both banks are polished jointly by
/// [`polish_pair`] and the synthesis taps refit once more.
pub fn design_with_synthesis(spec: &DesignSpec, init: Init, synth_size: usize) -> Result<CoDesignResult> {
    if synth_size == 0 {
        return Err(argument("synthesis size must be at least 1"));
    }
    let objective = Objective::new(spec)?;
    let nh = spec.channels * spec.size * spec.size;
    let placeholder = FilterBank::zeros(spec.channels, spec.size, spec.s)?;
    let g0 = SynthesisBank::zeros_for(&placeholder, synth_size)?;
    let zeros = vec![0.0; g0.filters().len()];
    let runner = Runner {
        objective,
        nh,
        synthesis: Some(g0.clone()),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (x, ev, restarts) = start(&runner, &init, &zeros, &mut rng)?;
    let (x, ev, log, backtracks) = runner.run(x, ev)?;

    let q = synth_size;
    let h = Array3::from_shape_vec((spec.channels, spec.size, spec.size), x[..nh].to_vec()).unwrap();
    let analysis = FilterBank::new(spec.s, h)?;
    let g = Array3::from_shape_vec((spec.channels, q, q), x[nh..].to_vec()).unwrap();
    let synthesis = SynthesisBank::new(spec.s, g0.origin(), g)?;
    let max = |a: ndarray::Array2<f64>| a.iter().copied().fold(0.0, f64::max);
    let residual_before_refit = max(synthesis_residual(&analysis, &synthesis, spec.grid_size)?);
    let mut synthesis = refit_synthesis(&analysis, &synthesis)?;
    let mut residual = max(synthesis_residual(&analysis, &synthesis, spec.grid_size)?);
    let mut parts = ev.parts;
    let mut polished = false;
    let mut analysis_change = 0.0;
    let mut analysis = analysis;
    if residual >= RESIDUAL_TARGET {
        let (h2, g2) = polish_pair(&analysis, &synthesis, POLISH_STEPS)?;
        let g2 = refit_synthesis(&h2, &g2)?;
        let r2 = max(synthesis_residual(&h2, &g2, spec.grid_size)?);
        let lambda = spec.penalty.lambda(spec.iters.max(1));
        // Keep the polished pair only if it improves and p_H stays positive.
        if let (true, Ok(ev2)) = (r2 < residual, runner.objective.evaluate(h2.filters(), Some((&g2, lambda)))) {
            analysis_change = (analysis.filters() - h2.filters()).iter().map(|d| d * d).sum::<f64>().sqrt();
            parts = ev2.parts;
            (analysis, synthesis, residual, polished) = (h2, g2, r2, true);
        }
    }
    let warning = (residual >= RESIDUAL_TARGET).then(|| {
        format!("left-inverse residual {residual:.3e} exceeds {RESIDUAL_TARGET:e} on the design grid")
    });
    Ok(CoDesignResult {
        analysis,
        synthesis,
        log,
        parts,
        restarts,
        backtracks,
        residual_before_refit,
        residual,
        polished,
        analysis_change,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_is_learning_rate() {
        let mut adam = Adam::new(3, 0.1);
        let s = adam.step(&[2.0, -0.5, 0.0]);
        assert!((s[0] - 0.1).abs() < 1e-6);
        assert!((s[1] + 0.1).abs() < 1e-6);
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn penalty_schedule() {
        assert_eq!(PenaltySchedule::Log2.lambda(1), 1.0);
        assert_eq!(PenaltySchedule::Log2.lambda(2), 1.0);
        assert_eq!(PenaltySchedule::Log2.lambda(8), 3.0);
        assert_eq!(PenaltySchedule::Constant(0.5).lambda(100), 0.5);
    }

    #[test]
    fn spec_validation() {
        assert!(DesignSpec::new(3, 4, 2, 16).is_err());
        let mut sp = DesignSpec::new(4, 4, 2, 16).unwrap();
        sp.beta = -1.0;
        assert!(sp.validate().is_err());
    }

    #[test]
    fn idft_init_of_flat_target_is_a_delta() {
        let mut sp = DesignSpec::new(1, 3, 1, 16).unwrap();
        sp.set_desired(0, &Array2::from_elem((16, 16), 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = initial_filters(&sp, InitStrategy::Idft, &mut rng);
        for ((_, a, b), v) in h.indexed_iter() {
            let expect = if (a, b) == (1, 1) { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-2);
        }
    }
}
