use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CoefficientField;
use crate::error::{Error, Result};
use crate::stochastic::{Component, PathBundle};

/// One named empirical check.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticCheck {
    pub name: String,
    pub statistic: f64,
    pub threshold: Option<f64>,
    pub passed: bool,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsReport {
    pub checks: Vec<DiagnosticCheck>,
}

impl DiagnosticsReport {
    pub fn push(&mut self, name: impl Into<String>, statistic: f64, threshold: Option<f64>, passed: bool, n_samples: usize) {
        self.checks.push(DiagnosticCheck { name: name.into(), statistic, threshold, passed, n_samples });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&DiagnosticCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn extend(&mut self, other: DiagnosticsReport) {
        self.checks.extend(other.checks);
    }
}

/// Uniform sampler of `(t, x, y1, y2)` on an axis-aligned box.
#[derive(Debug, Clone)]
pub struct BoxSampler {
    pub time: (f64, f64),
    pub slow: (f64, f64),
    pub fast: (f64, f64),
    rng: ChaCha8Rng,
}

impl BoxSampler {
    pub fn new(time: (f64, f64), slow: (f64, f64), fast: (f64, f64), seed: u64) -> Self {
        Self { time, slow, fast, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn uniform(&mut self, (lo, hi): (f64, f64)) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    /// Draws a point and two distinct fast states.
    pub fn sample(&mut self, x: &mut [f64], y1: &mut [f64], y2: &mut [f64]) -> f64 {
        let t = self.uniform(self.time);
        for v in x.iter_mut() {
            *v = self.uniform(self.slow);
        }
        loop {
            for (a, b) in y1.iter_mut().zip(y2.iter_mut()) {
                *a = self.uniform(self.fast);
                *b = self.uniform(self.fast);
            }
            if y1 != y2 {
                return t;
            }
        }
    }
}

/// Estimates the dissipativity constant of the fast pair `(B, C)`:
/// `beta = -max (<B(y2) - B(y1), y2 - y1> + |C(y2) - C(y1)|^2) / |y2 - y1|^2`
/// over `n_trials` sampled points.
pub fn check_dissipativity(
    fast_drift: &CoefficientField,
    fast_diffusion: &CoefficientField,
    sampler: &mut BoxSampler,
    n_trials: usize,
) -> Result<f64> {
    if n_trials == 0 {
        return Err(Error::InvalidParameter("n_trials must be at least 1".into()));
    }
    let (d, l) = (fast_drift.slow_dim(), fast_drift.fast_dim());
    fast_diffusion.expect_shape("fast diffusion", d, l, super::Shape::Matrix(l, l))?;
    let (mut x, mut y1, mut y2) = (vec![0.0; d], vec![0.0; l], vec![0.0; l]);
    let (mut b1, mut b2) = (vec![0.0; l], vec![0.0; l]);
    let (mut c1, mut c2) = (vec![0.0; l * l], vec![0.0; l * l]);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..n_trials {
        let t = sampler.sample(&mut x, &mut y1, &mut y2);
        fast_drift.eval(t, &x, &y1, &mut b1);
        fast_drift.eval(t, &x, &y2, &mut b2);
        fast_diffusion.eval(t, &x, &y1, &mut c1);
        fast_diffusion.eval(t, &x, &y2, &mut c2);
        let mut inner = 0.0;
        let mut dist = 0.0;
        for i in 0..l {
            let dy = y2[i] - y1[i];
            inner += (b2[i] - b1[i]) * dy;
            dist += dy * dy;
        }
        let spread: f64 = c1.iter().zip(&c2).map(|(a, b)| (b - a) * (b - a)).sum();
        let ratio = (inner + spread) / dist;
        if ratio > 0.0 || !ratio.is_finite() {
            return Err(Error::DissipativityViolated { t, x, y1, y2, ratio });
        }
        worst = worst.max(ratio);
    }
    Ok(-worst)
}

/// Spot-checks the declared Lipschitz and sublinearity constants of a field
/// on random pairs drawn from `sampler` (the pair shares `t` and perturbs
/// both `x` and `y`).
pub fn check_constants(field: &CoefficientField, sampler: &mut BoxSampler, n_trials: usize) -> DiagnosticsReport {
    let (d, l) = (field.slow_dim(), field.fast_dim());
    let (mut x1, mut y1, mut y2) = (vec![0.0; d], vec![0.0; l], vec![0.0; l]);
    let (mut x2, mut spare1, mut spare2) = (vec![0.0; d], vec![0.0; l], vec![0.0; l]);
    let (mut f1, mut f2) = (vec![0.0; field.shape().len()], vec![0.0; field.shape().len()]);
    let mut lip = 0.0f64;
    let mut growth = 0.0f64;
    for _ in 0..n_trials {
        let t = sampler.sample(&mut x1, &mut y1, &mut y2);
        sampler.sample(&mut x2, &mut spare1, &mut spare2);
        field.eval(t, &x1, &y1, &mut f1);
        field.eval(t, &x2, &y2, &mut f2);
        let df = norm_diff(&f1, &f2);
        let dp = (norm_diff(&x1, &x2).powi(2) + norm_diff(&y1, &y2).powi(2)).sqrt();
        if dp > 0.0 {
            lip = lip.max(df / dp);
        }
        let size = 1.0 + norm(&x1) + norm(&y1);
        growth = growth.max(norm(&f1) / size);
    }
    let mut report = DiagnosticsReport::default();
    let c = field.constants();
    let name = field.name();
    report.push(format!("{name}.lipschitz"), lip, c.lipschitz, c.lipschitz.is_none_or(|l| lip <= l * (1.0 + 1e-9)), n_trials);
    report.push(
        format!("{name}.sublinearity"),
        growth,
        c.sublinearity,
        c.sublinearity.is_none_or(|m| growth <= m * (1.0 + 1e-9)),
        n_trials,
    );
    report
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Moment diagnostics on the slow paths of a bundle.
///
/// Reports `E sup_t |X_t|^p` and fits the slope of `log E|X_{t+k h} - X_t|^p`
/// against `log(k h)` over dyadic lags `k <= n_steps / 8`; the slope check
/// fails below `0.8 p / 2`.
pub fn check_moment_bounds(bundle: &PathBundle, p: f64) -> Result<DiagnosticsReport> {
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter(format!("moment order {p} must be at least 2")));
    }
    let cols = bundle.indices_where(|c| matches!(c, Component::Slow(_)));
    if cols.is_empty() {
        return Err(Error::DimensionMismatch("bundle has no slow component".into()));
    }
    let n_paths = bundle.n_paths();
    let n_nodes = bundle.grid().n_nodes();
    let h = bundle.grid().step();
    let point = |path: usize, k: usize| -> Vec<f64> { cols.iter().map(|&c| bundle.value(path, k, c)).collect() };

    let mut sup_sum = 0.0;
    for path in 0..n_paths {
        let sup = (0..n_nodes).map(|k| norm(&point(path, k)).powf(p)).fold(0.0, f64::max);
        sup_sum += sup;
    }
    let mut report = DiagnosticsReport::default();
    let sup_moment = sup_sum / n_paths.max(1) as f64;
    report.push("sup_moment", sup_moment, None, sup_moment.is_finite(), n_paths);

    let max_lag = ((n_nodes - 1) / 8).max(1);
    let mut lags = Vec::new();
    let mut k = 1;
    while k <= max_lag && k < n_nodes {
        lags.push(k);
        k *= 2;
    }
    let mut moments = Vec::with_capacity(lags.len());
    for &lag in &lags {
        let mut acc = 0.0;
        let mut count = 0usize;
        for path in 0..n_paths {
            for k in 0..n_nodes - lag {
                let diff: f64 = cols
                    .iter()
                    .map(|&c| (bundle.value(path, k + lag, c) - bundle.value(path, k, c)).powi(2))
                    .sum();
                acc += diff.powf(p / 2.0);
                count += 1;
            }
        }
        moments.push(acc / count.max(1) as f64);
    }
    let max_increment = moments.iter().cloned().fold(0.0, f64::max);
    report.push("increment_moment_max", max_increment, None, max_increment.is_finite(), n_paths);
    if lags.len() >= 2 && moments.iter().all(|&m| m > 0.0) {
        let xs: Vec<f64> = lags.iter().map(|&k| (k as f64 * h).ln()).collect();
        let ys: Vec<f64> = moments.iter().map(|m| m.ln()).collect();
        let slope = regression_slope(&xs, &ys);
        let threshold = 0.8 * p / 2.0;
        report.push("increment_slope", slope, Some(threshold), slope >= threshold, n_paths);
    }
    Ok(report)
}

pub(crate) fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// `E|Y_t|^2` at every node, averaged over the bundle's paths.
pub fn fast_l2_profile(bundle: &PathBundle) -> Vec<f64> {
    let cols = bundle.indices_where(|c| matches!(c, Component::Fast(_)));
    let n = bundle.n_paths().max(1) as f64;
    (0..bundle.grid().n_nodes())
        .map(|k| {
            (0..bundle.n_paths())
                .map(|path| cols.iter().map(|&c| bundle.value(path, k, c).powi(2)).sum::<f64>())
                .sum::<f64>()
                / n
        })
        .collect()
}
