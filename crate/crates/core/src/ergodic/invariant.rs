use super::frozen::{guard, FrozenEquation, FrozenStepper};
use crate::engine::CoefficientField;
use crate::error::{Error, Result, Warning};
use crate::stochastic::{batch_means, mc_estimate, Executor, RngStream, StreamFamily};

/// Controls for time-averaging along a frozen trajectory.
///
/// `burn_in` and `horizon` default to `10 / beta` and `200 / beta` using the
/// dissipativity constant declared on the fast drift. Averages are taken
/// over `[burn_in, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicParams {
    pub burn_in: Option<f64>,
    pub horizon: Option<f64>,
    pub step: f64,
    pub n_batches: usize,
    /// Stored samples for quantiles and the decay curve are thinned to at most this many.
    pub max_stored: usize,
    pub decay_points: usize,
    /// Cross-check mode: average over this many independent paths observed
    /// at `horizon` instead of along one long trajectory.
    pub ensemble: Option<usize>,
}

impl Default for ErgodicParams {
    fn default() -> Self {
        Self { burn_in: None, horizon: None, step: 1e-3, n_batches: 50, max_stored: 1 << 20, decay_points: 20, ensemble: None }
    }
}

pub const DEFAULT_BURN_IN_BETAS: f64 = 10.0;
pub const DEFAULT_HORIZON_BETAS: f64 = 200.0;

impl ErgodicParams {
    /// Resolved `(burn_in, horizon)`.
    pub fn window(&self, frozen: &FrozenEquation) -> Result<(f64, f64)> {
        let beta = || frozen.require_beta();
        let burn_in = match self.burn_in {
            Some(b) => b,
            None => DEFAULT_BURN_IN_BETAS / beta()?,
        };
        let horizon = match self.horizon {
            Some(h) => h,
            None => DEFAULT_HORIZON_BETAS / beta()?,
        };
        if !(burn_in >= 0.0) || !(horizon > burn_in) {
            return Err(Error::InvalidParameter(format!("need 0 <= burn_in ({burn_in}) < horizon ({horizon})")));
        }
        if !(self.step > 0.0) || self.step > horizon - burn_in {
            return Err(Error::InvalidParameter(format!("ergodic step {} is not usable", self.step)));
        }
        Ok((burn_in, horizon))
    }
}

/// Time average of a vector observable with batch-means errors.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TimeAverage {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_samples: usize,
    pub burn_in: f64,
    pub horizon: f64,
    pub warnings: Vec<Warning>,
    /// Thinned post-burn-in fast states `[sample][component]` and their spacing.
    pub stored: Vec<f64>,
    pub stored_spacing: f64,
    /// Per-observable sample variance over all post-burn-in steps.
    pub variance: Vec<f64>,
}

pub(crate) fn time_average<F>(
    frozen: &FrozenEquation,
    y_init: &[f64],
    params: &ErgodicParams,
    stream: RngStream,
    n_obs: usize,
    store: bool,
    mut observe: F,
) -> Result<TimeAverage>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let l = frozen.fast_dim();
    if y_init.len() != l {
        return Err(Error::DimensionMismatch(format!("y_init has {} entries, expected {l}", y_init.len())));
    }
    let (burn_in, horizon) = params.window(frozen)?;
    if let Some(n) = params.ensemble {
        return ensemble_average(frozen, y_init, params, stream, n, n_obs, burn_in, horizon, observe);
    }
    let h = params.step;
    let burn_steps = (burn_in / h).round() as usize;
    let total_steps = (horizon / h).round() as usize;
    let n = total_steps - burn_steps;
    let nb = params.n_batches;
    if nb < 4 || n / nb == 0 {
        return Err(Error::InsufficientSamples(n));
    }
    let batch_len = n / nb;
    let skip = n - batch_len * nb;
    let thin = if store { n.div_ceil(params.max_stored.max(1)).max(1) } else { usize::MAX };

    let mut source = stream.source();
    let mut stepper = FrozenStepper::new(frozen);
    let mut y = y_init.to_vec();
    for k in 0..burn_steps {
        stepper.step(&mut y, h, &mut source);
        guard(&y, 0, (k + 1) as f64 * h)?;
    }
    let mut obs = vec![0.0; n_obs];
    let mut batch_acc = vec![0.0; n_obs];
    let mut batches: Vec<Vec<f64>> = vec![Vec::with_capacity(nb); n_obs];
    // Shifted sums for the sample variance.
    let mut shift: Option<Vec<f64>> = None;
    let mut s1 = vec![0.0; n_obs];
    let mut s2 = vec![0.0; n_obs];
    let mut constant = vec![true; n_obs];
    let mut stored = Vec::new();
    for i in 0..n {
        stepper.step(&mut y, h, &mut source);
        guard(&y, 0, (burn_steps + i + 1) as f64 * h)?;
        if store && i % thin == 0 {
            stored.extend_from_slice(&y);
        }
        observe(&y, &mut obs);
        let sh = shift.get_or_insert_with(|| obs.clone());
        for j in 0..n_obs {
            let c = obs[j] - sh[j];
            s1[j] += c;
            s2[j] += c * c;
            constant[j] &= c == 0.0;
        }
        if i < skip {
            continue;
        }
        batch_acc.iter_mut().zip(&obs).for_each(|(a, o)| *a += o);
        if (i - skip + 1).is_multiple_of(batch_len) {
            for j in 0..n_obs {
                batches[j].push(batch_acc[j] / batch_len as f64);
                batch_acc[j] = 0.0;
            }
        }
    }
    let nf = n as f64;
    let variance: Vec<f64> = (0..n_obs).map(|j| ((s2[j] - s1[j] * s1[j] / nf) / (nf - 1.0)).max(0.0)).collect();
    let mut mean = Vec::with_capacity(n_obs);
    let mut std_error = Vec::with_capacity(n_obs);
    let mut warnings = Vec::new();
    for (j, series) in batches.iter().enumerate() {
        if constant[j] {
            // Exact value rather than a sum of rounded batch averages.
            mean.push(shift.as_ref().map_or(0.0, |s| s[j]));
            std_error.push(0.0);
            continue;
        }
        let bm = batch_means(series, nb)?;
        mean.push(bm.mean);
        std_error.push(bm.std_error);
        let half = nb / 2;
        let first = batch_means(&series[..half], half)?;
        let second = batch_means(&series[half..], nb - half)?;
        let threshold = 5.0 * first.std_error.hypot(second.std_error) + 1e-12 * (1.0 + bm.mean.abs());
        if (first.mean - second.mean).abs() > threshold {
            let w = Warning::NonStationary { component: j, first_half: first.mean, second_half: second.mean, threshold };
            log::warn!("frozen equation at t = {}, x = {:?}: {w}", frozen.t, frozen.x);
            warnings.push(w);
        }
    }
    Ok(TimeAverage {
        mean,
        std_error,
        n_samples: n,
        burn_in,
        horizon,
        warnings,
        stored,
        stored_spacing: if store { thin as f64 * h } else { 0.0 },
        variance,
    })
}

#[allow(clippy::too_many_arguments)]
fn ensemble_average<F>(
    frozen: &FrozenEquation,
    y_init: &[f64],
    params: &ErgodicParams,
    stream: RngStream,
    n_paths: usize,
    n_obs: usize,
    burn_in: f64,
    horizon: f64,
    mut observe: F,
) -> Result<TimeAverage>
where
    F: FnMut(&[f64], &mut [f64]),
{
    // Path p uses stream index base + p within the caller's seed.
    let family = StreamFamily::new(stream.master_seed, (stream.stream_index >> 32) as u32);
    let base = (stream.stream_index & 0xffff_ffff) as usize;
    let steps = (horizon / params.step).round() as usize;
    let mut stepper = FrozenStepper::new(frozen);
    let mut values: Vec<Vec<f64>> = vec![Vec::with_capacity(n_paths); n_obs];
    let mut stored = Vec::with_capacity(n_paths * y_init.len());
    let mut obs = vec![0.0; n_obs];
    for p in 0..n_paths {
        let mut source = family.stream(base + p).source();
        let mut y = y_init.to_vec();
        for k in 0..steps {
            stepper.step(&mut y, params.step, &mut source);
            guard(&y, p, (k + 1) as f64 * params.step)?;
        }
        stored.extend_from_slice(&y);
        observe(&y, &mut obs);
        values.iter_mut().zip(&obs).for_each(|(v, o)| v.push(*o));
    }
    let mut mean = Vec::with_capacity(n_obs);
    let mut std_error = Vec::with_capacity(n_obs);
    let mut variance = Vec::with_capacity(n_obs);
    for v in &values {
        let est = mc_estimate(v)?;
        mean.push(est.mean);
        std_error.push(est.std_error);
        variance.push(est.std_error.powi(2) * n_paths as f64);
    }
    Ok(TimeAverage {
        mean,
        std_error,
        n_samples: n_paths,
        burn_in,
        horizon,
        warnings: Vec::new(),
        stored,
        stored_spacing: 0.0,
        variance,
    })
}

/// Empirical summary of the invariant measure of a frozen equation.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantMeasureEstimate {
    pub t: f64,
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// Row-major `l x l`.
    pub covariance: Vec<f64>,
    /// Batch-means SE of the second moments `E[y_i y_j]`.
    pub covariance_se: Vec<f64>,
    /// `(level, per-component quantile)`.
    pub quantiles: Vec<(f64, Vec<f64>)>,
    pub burn_in: f64,
    pub horizon: f64,
    pub n_samples: usize,
    pub effective_sample_size: f64,
    /// `(lag, mean |autocorrelation|)`: empirical distance to equilibrium.
    pub decay: Vec<(f64, f64)>,
    pub warnings: Vec<Warning>,
}

pub const QUANTILE_LEVELS: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

/// Estimates moments, quantiles and the autocorrelation decay of the
/// invariant measure from a single long trajectory (or an ensemble when
/// `params.ensemble` is set).
pub fn estimate_invariant(
    frozen: &FrozenEquation,
    y_init: &[f64],
    params: &ErgodicParams,
    stream: RngStream,
) -> Result<InvariantMeasureEstimate> {
    let l = frozen.fast_dim();
    let n_obs = l + l * l;
    let avg = time_average(frozen, y_init, params, stream, n_obs, true, |y, out| {
        out[..l].copy_from_slice(y);
        for i in 0..l {
            for j in 0..l {
                out[l + i * l + j] = y[i] * y[j];
            }
        }
    })?;
    let mean = avg.mean[..l].to_vec();
    let mut covariance = vec![0.0; l * l];
    for i in 0..l {
        for j in 0..l {
            covariance[i * l + j] = avg.mean[l + i * l + j] - mean[i] * mean[j];
        }
    }
    for i in 0..l {
        for j in 0..i {
            let s = 0.5 * (covariance[i * l + j] + covariance[j * l + i]);
            covariance[i * l + j] = s;
            covariance[j * l + i] = s;
        }
        covariance[i * l + i] = covariance[i * l + i].max(0.0);
    }
    let n = avg.n_samples as f64;
    let effective_sample_size = (0..l)
        .map(|i| {
            let se = avg.std_error[i];
            if se > 0.0 {
                (avg.variance[i] / (se * se)).min(n)
            } else {
                n
            }
        })
        .fold(n, f64::min);
    let quantiles = quantiles(&avg.stored, l);
    let decay = if avg.stored_spacing > 0.0 {
        decay_curve(&avg.stored, l, avg.stored_spacing, frozen.beta(), avg.horizon - avg.burn_in, params.decay_points)
    } else {
        Vec::new()
    };
    Ok(InvariantMeasureEstimate {
        t: frozen.t,
        x: frozen.x.clone(),
        mean,
        mean_se: avg.std_error[..l].to_vec(),
        covariance,
        covariance_se: avg.std_error[l..].to_vec(),
        quantiles,
        burn_in: avg.burn_in,
        horizon: avg.horizon,
        n_samples: avg.n_samples,
        effective_sample_size,
        decay,
        warnings: avg.warnings,
    })
}

fn quantiles(stored: &[f64], l: usize) -> Vec<(f64, Vec<f64>)> {
    let n = stored.len() / l;
    if n == 0 {
        return Vec::new();
    }
    let columns: Vec<Vec<f64>> = (0..l)
        .map(|i| {
            let mut c: Vec<f64> = (0..n).map(|k| stored[k * l + i]).collect();
            c.sort_by(f64::total_cmp);
            c
        })
        .collect();
    QUANTILE_LEVELS
        .iter()
        .map(|&q| {
            let pos = q * (n - 1) as f64;
            let (lo, frac) = (pos.floor() as usize, pos - pos.floor());
            let hi = (lo + 1).min(n - 1);
            (q, columns.iter().map(|c| c[lo] + frac * (c[hi] - c[lo])).collect())
        })
        .collect()
}

/// Mean absolute autocorrelation over components at evenly spaced lags up
/// to `3 / beta` (or a tenth of the averaging window without a declared beta).
fn decay_curve(stored: &[f64], l: usize, spacing: f64, beta: Option<f64>, window: f64, points: usize) -> Vec<(f64, f64)> {
    let n = stored.len() / l;
    if n < 4 || points == 0 {
        return Vec::new();
    }
    let max_lag_time = beta.map_or(window / 10.0, |b| 3.0 / b).min(window / 4.0);
    let max_lag = ((max_lag_time / spacing) as usize).min(n / 4).max(1);
    let stride = max_lag.div_ceil(points).max(1);
    let stats: Vec<(f64, f64)> = (0..l)
        .map(|i| {
            let m = (0..n).map(|k| stored[k * l + i]).sum::<f64>() / n as f64;
            let v = (0..n).map(|k| (stored[k * l + i] - m).powi(2)).sum::<f64>() / n as f64;
            (m, v)
        })
        .collect();
    (0..=max_lag)
        .step_by(stride)
        .map(|lag| {
            let mut acc = 0.0;
            for (i, &(m, v)) in stats.iter().enumerate() {
                if v <= 0.0 {
                    continue;
                }
                let c: f64 = (0..n - lag).map(|k| (stored[k * l + i] - m) * (stored[(k + lag) * l + i] - m)).sum::<f64>()
                    / (n - lag) as f64;
                acc += (c / v).abs();
            }
            (lag as f64 * spacing, acc / l as f64)
        })
        .collect()
}

/// Averaged coefficient with componentwise batch-means errors.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedEstimate {
    pub value: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_samples: usize,
    pub warnings: Vec<Warning>,
}

fn check_field(field: &CoefficientField, frozen: &FrozenEquation) -> Result<()> {
    if field.slow_dim() != frozen.x.len() || field.fast_dim() != frozen.fast_dim() {
        return Err(Error::DimensionMismatch(format!(
            "field `{}` has arity ({}, {}), frozen equation ({}, {})",
            field.name(),
            field.slow_dim(),
            field.fast_dim(),
            frozen.x.len(),
            frozen.fast_dim()
        )));
    }
    Ok(())
}

/// Time average of `b(t, x, y_s)` along the frozen trajectory.
pub fn estimate_averaged_drift(
    b: &CoefficientField,
    frozen: &FrozenEquation,
    y_init: &[f64],
    params: &ErgodicParams,
    stream: RngStream,
) -> Result<AveragedEstimate> {
    check_field(b, frozen)?;
    let (t, x) = (frozen.t, frozen.x.clone());
    let avg = time_average(frozen, y_init, params, stream, b.shape().len(), false, |y, out| b.eval(t, &x, y, out))?;
    Ok(AveragedEstimate { value: avg.mean, std_error: avg.std_error, n_samples: avg.n_samples, warnings: avg.warnings })
}

/// `a = sigma sigma^T / 2` written row-major into `out`.
pub(crate) fn half_outer(sigma: &[f64], d: usize, out: &mut [f64]) {
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..d {
                s += sigma[i * d + k] * sigma[j * d + k];
            }
            out[i * d + j] = 0.5 * s;
        }
    }
}

pub(crate) fn symmetrize(m: &mut [f64], d: usize) {
    for i in 0..d {
        for j in 0..i {
            let s = 0.5 * (m[i * d + j] + m[j * d + i]);
            m[i * d + j] = s;
            m[j * d + i] = s;
        }
    }
}

/// Time average of `sigma sigma^T / 2` along the frozen trajectory,
/// symmetrized.
pub fn estimate_averaged_diffusion(
    sigma: &CoefficientField,
    frozen: &FrozenEquation,
    y_init: &[f64],
    params: &ErgodicParams,
    stream: RngStream,
) -> Result<AveragedEstimate> {
    check_field(sigma, frozen)?;
    let d = frozen.x.len();
    let (t, x) = (frozen.t, frozen.x.clone());
    let mut s = vec![0.0; d * d];
    let avg = time_average(frozen, y_init, params, stream, d * d, false, |y, out| {
        sigma.eval(t, &x, y, &mut s);
        half_outer(&s, d, out);
    })?;
    let (mut value, mut std_error) = (avg.mean, avg.std_error);
    symmetrize(&mut value, d);
    symmetrize(&mut std_error, d);
    Ok(AveragedEstimate { value, std_error, n_samples: avg.n_samples, warnings: avg.warnings })
}

/// Ensemble cross-check of a drift average over `n_paths` independent
/// paths; returns the same shape as [`estimate_averaged_drift`].
pub fn ensemble_averaged_drift(
    b: &CoefficientField,
    frozen: &FrozenEquation,
    y_init: &[f64],
    params: &ErgodicParams,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
) -> Result<AveragedEstimate> {
    check_field(b, frozen)?;
    let (_, horizon) = params.window(frozen)?;
    let steps = (horizon / params.step).round() as usize;
    let len = b.shape().len();
    let values = exec.map(
        n_paths,
        || FrozenStepper::new(frozen),
        |stepper, p| {
            let mut source = streams.stream(p).source();
            let mut y = y_init.to_vec();
            for k in 0..steps {
                stepper.step(&mut y, params.step, &mut source);
                guard(&y, p, (k + 1) as f64 * params.step)?;
            }
            Ok(b.eval_vec(frozen.t, &frozen.x, &y))
        },
    )?;
    let mut value = Vec::with_capacity(len);
    let mut std_error = Vec::with_capacity(len);
    for j in 0..len {
        let est = mc_estimate(&values.iter().map(|v| v[j]).collect::<Vec<_>>())?;
        value.push(est.mean);
        std_error.push(est.std_error);
    }
    Ok(AveragedEstimate { value, std_error, n_samples: n_paths, warnings: Vec::new() })
}
