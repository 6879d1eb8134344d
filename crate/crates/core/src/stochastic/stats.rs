use crate::error::{Error, Result};

/// Mean, standard error and sample count of a Monte Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(n_samples)`.
    pub std_error: f64,
    pub n_samples: usize,
}

impl MonteCarloEstimate {
    /// `|mean - target| <= k * std_error`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error
    }
}

pub fn mc_estimate(samples: &[f64]) -> Result<MonteCarloEstimate> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(n));
    }
    if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSample { index });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let ss: f64 = samples.iter().map(|v| (v - mean).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    Ok(MonteCarloEstimate { mean, std_error: sd / (n as f64).sqrt(), n_samples: n })
}

/// Standard error of the difference of two independent estimates.
pub fn combined_se(a: &MonteCarloEstimate, b: &MonteCarloEstimate) -> f64 {
    a.std_error.hypot(b.std_error)
}

/// Batch-means summary of a correlated series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchMeans {
    pub mean: f64,
    pub std_error: f64,
    pub n_batches: usize,
    pub batch_len: usize,
}

/// Splits `series` into `n_batches` equal contiguous batches (dropping the
/// remainder at the front) and estimates the SE of the mean from the spread
/// of the batch means.
pub fn batch_means(series: &[f64], n_batches: usize) -> Result<BatchMeans> {
    if n_batches < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 batches, got {n_batches}")));
    }
    let batch_len = series.len() / n_batches;
    if batch_len == 0 {
        return Err(Error::InsufficientSamples(series.len()));
    }
    let skip = series.len() - batch_len * n_batches;
    let means: Vec<f64> = series[skip..]
        .chunks_exact(batch_len)
        .map(|c| c.iter().sum::<f64>() / batch_len as f64)
        .collect();
    let est = mc_estimate(&means)?;
    Ok(BatchMeans { mean: est.mean, std_error: est.std_error, n_batches, batch_len })
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic 1% critical value `1.63 sqrt((n + m) / (n m))`.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.63 * ((n + m) / (n * m)).sqrt()
}
