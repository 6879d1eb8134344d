use crate::engine::{CoefficientField, Shape, SlowFastSystem, DEFAULT_OVERFLOW_GUARD};
use crate::error::{Error, Result};
use crate::stochastic::{mc_estimate, Component, Executor, GaussianSource, MonteCarloEstimate, PathBundle, StreamFamily, TimeGrid};

/// The fast equation `dy = B(t, x, y) ds + C(t, x, y) dW~` with `(t, x)` held fixed.
#[derive(Debug, Clone)]
pub struct FrozenEquation {
    pub fast_drift: CoefficientField,
    pub fast_diffusion: CoefficientField,
    pub t: f64,
    pub x: Vec<f64>,
}

impl FrozenEquation {
    pub fn new(fast_drift: CoefficientField, fast_diffusion: CoefficientField, t: f64, x: Vec<f64>) -> Result<Self> {
        let (d, l) = (x.len(), fast_drift.fast_dim());
        fast_drift.expect_shape("fast drift", d, l, Shape::Vector(l))?;
        fast_diffusion.expect_shape("fast diffusion", d, l, Shape::Matrix(l, l))?;
        Ok(Self { fast_drift, fast_diffusion, t, x })
    }

    /// Freezes the fast pair of `system` at `(t, x)`.
    pub fn of_system(system: &SlowFastSystem, t: f64, x: &[f64]) -> Result<Self> {
        Self::new(system.fast_drift.clone(), system.fast_diffusion.clone(), t, x.to_vec())
    }

    pub fn fast_dim(&self) -> usize {
        self.fast_drift.fast_dim()
    }

    /// Declared dissipativity constant of the fast drift.
    pub fn beta(&self) -> Option<f64> {
        self.fast_drift.constants().dissipativity
    }

    pub(crate) fn require_beta(&self) -> Result<f64> {
        self.beta().filter(|b| *b > 0.0).ok_or_else(|| Error::MissingConstant {
            field: self.fast_drift.name().to_string(),
            constant: "dissipativity",
        })
    }
}

/// Euler-Maruyama stepper for a frozen equation with reusable scratch.
pub(crate) struct FrozenStepper<'a> {
    eq: &'a FrozenEquation,
    drift: Vec<f64>,
    diffusion: Vec<f64>,
    noise: Vec<f64>,
}

impl<'a> FrozenStepper<'a> {
    pub fn new(eq: &'a FrozenEquation) -> Self {
        let l = eq.fast_dim();
        Self { eq, drift: vec![0.0; l], diffusion: vec![0.0; l * l], noise: vec![0.0; l] }
    }

    /// Draws `l` normals and advances `y` by one step of size `dt`.
    #[inline]
    pub fn step(&mut self, y: &mut [f64], dt: f64, source: &mut GaussianSource) {
        source.fill(&mut self.noise);
        let sq = dt.sqrt();
        self.noise.iter_mut().for_each(|z| *z *= sq);
        self.apply(y, dt);
    }

    /// Advances `y` using the increments already stored by the last `step`.
    #[inline]
    pub fn apply(&mut self, y: &mut [f64], dt: f64) {
        let l = y.len();
        self.eq.fast_drift.eval(self.eq.t, &self.eq.x, y, &mut self.drift);
        self.eq.fast_diffusion.eval(self.eq.t, &self.eq.x, y, &mut self.diffusion);
        for i in 0..l {
            let mut inc = self.drift[i] * dt;
            for j in 0..l {
                inc += self.diffusion[i * l + j] * self.noise[j];
            }
            self.drift[i] = inc;
        }
        y.iter_mut().zip(&self.drift).for_each(|(v, d)| *v += d);
    }
}

pub(crate) fn guard(y: &[f64], path: usize, time: f64) -> Result<()> {
    if y.iter().any(|v| !(v.abs() <= DEFAULT_OVERFLOW_GUARD)) {
        return Err(Error::NumericalBlowup { path, time });
    }
    Ok(())
}

/// Euler-Maruyama paths of the frozen equation on `grid`, all started at `y_init`.
pub fn simulate_frozen(
    frozen: &FrozenEquation,
    y_init: &[f64],
    grid: &TimeGrid,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
) -> Result<PathBundle> {
    let l = frozen.fast_dim();
    if y_init.len() != l {
        return Err(Error::DimensionMismatch(format!("y_init has {} entries, expected {l}", y_init.len())));
    }
    let paths = exec.map(
        n_paths,
        || FrozenStepper::new(frozen),
        |stepper, p| {
            let mut source = streams.stream(p).source();
            let mut y = y_init.to_vec();
            let mut out = Vec::with_capacity(grid.n_nodes() * l);
            out.extend_from_slice(&y);
            for k in 0..grid.n_steps() {
                stepper.step(&mut y, grid.step(), &mut source);
                guard(&y, p, grid.node(k + 1))?;
                out.extend_from_slice(&y);
            }
            Ok(out)
        },
    )?;
    let ids = (0..n_paths).map(|p| streams.stream(p)).collect();
    Ok(PathBundle::new(*grid, (0..l).map(Component::Fast).collect(), paths.concat(), ids))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionRow {
    pub s: f64,
    /// `E|y_s^{y1} - y_s^{y2}|^2` under common noise.
    pub distance: MonteCarloEstimate,
    /// `exp(-2 beta s) |y1 - y2|^2`.
    pub bound: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub beta: f64,
    pub margin: f64,
    pub rows: Vec<ContractionRow>,
}

impl ContractionReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| !r.flagged)
    }
}

/// Runs two copies of the frozen equation from `y1` and `y2` on the same
/// noise and compares their mean squared distance with the exponential
/// contraction bound. A row is flagged when the estimate exceeds
/// `bound (1 + margin) + 3 SE`.
#[allow(clippy::too_many_arguments)]
pub fn verify_contraction(
    frozen: &FrozenEquation,
    y1: &[f64],
    y2: &[f64],
    times: &[f64],
    step: f64,
    margin: f64,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
) -> Result<ContractionReport> {
    let beta = frozen.require_beta()?;
    let l = frozen.fast_dim();
    if y1.len() != l || y2.len() != l {
        return Err(Error::DimensionMismatch("initial states must match the fast dimension".into()));
    }
    if y1 == y2 {
        return Err(Error::InvalidParameter("contraction needs y1 != y2".into()));
    }
    if !(step > 0.0) || times.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::InvalidParameter("step must be positive and times non-negative".into()));
    }
    let targets: Vec<usize> = times.iter().map(|s| (s / step).round() as usize).collect();
    let last = targets.iter().copied().max().unwrap_or(0);
    let per_path = exec.map(
        n_paths,
        || (FrozenStepper::new(frozen), FrozenStepper::new(frozen)),
        |(a, b), p| {
            let mut source = streams.stream(p).source();
            let (mut ya, mut yb) = (y1.to_vec(), y2.to_vec());
            let mut out = vec![0.0; targets.len()];
            let record = |k: usize, ya: &[f64], yb: &[f64], out: &mut [f64]| {
                let dist: f64 = ya.iter().zip(yb).map(|(u, v)| (u - v) * (u - v)).sum();
                for (slot, &t) in out.iter_mut().zip(&targets) {
                    if t == k {
                        *slot = dist;
                    }
                }
            };
            record(0, &ya, &yb, &mut out);
            for k in 1..=last {
                a.step(&mut ya, step, &mut source);
                b.noise.copy_from_slice(&a.noise);
                b.apply(&mut yb, step);
                guard(&ya, p, k as f64 * step)?;
                guard(&yb, p, k as f64 * step)?;
                record(k, &ya, &yb, &mut out);
            }
            Ok(out)
        },
    )?;
    let d0: f64 = y1.iter().zip(y2).map(|(u, v)| (u - v) * (u - v)).sum();
    let mut rows = Vec::with_capacity(times.len());
    for (i, &s) in times.iter().enumerate() {
        let samples: Vec<f64> = per_path.iter().map(|v| v[i]).collect();
        let distance = mc_estimate(&samples)?;
        let bound = (-2.0 * beta * s).exp() * d0;
        let flagged = distance.mean > bound * (1.0 + margin) + 3.0 * distance.std_error;
        rows.push(ContractionRow { s, distance, bound, flagged });
    }
    Ok(ContractionReport { beta, margin, rows })
}
