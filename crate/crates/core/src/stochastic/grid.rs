use crate::error::{Error, Result};

const SPAN_TOLERANCE: f64 = 1e-12;

/// Uniform time grid `t0, t0 + h, ..., t_end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    t_end: f64,
    step: f64,
    n_steps: usize,
}

impl TimeGrid {
    /// Grid of `n_steps` steps of size `step` starting at `t0`.
    pub fn new(t0: f64, step: f64, n_steps: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidGrid(format!("step must be positive, got {step}")));
        }
        if !t0.is_finite() {
            return Err(Error::InvalidGrid(format!("t0 must be finite, got {t0}")));
        }
        Ok(Self { t0, t_end: t0 + step * n_steps as f64, step, n_steps })
    }

    /// Grid covering `[t0, t_end]` with exactly `n_steps` equal steps.
    pub fn over(t0: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidGrid("over() needs at least one step".into()));
        }
        if !(t_end > t0) {
            return Err(Error::InvalidGrid(format!("t_end = {t_end} must exceed t0 = {t0}")));
        }
        let step = (t_end - t0) / n_steps as f64;
        Ok(Self { t0, t_end, step, n_steps })
    }

    /// Grid covering `[t0, t_end]` with step `h`; the span must be an integer
    /// multiple of `h` to within `1e-12` relative.
    pub fn with_step(t0: f64, t_end: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {h}")));
        }
        let span = t_end - t0;
        if !(span > 0.0) {
            return Err(Error::InvalidGrid(format!("t_end = {t_end} must exceed t0 = {t0}")));
        }
        let n = (span / h).round();
        if n < 1.0 || (n * h - span).abs() > SPAN_TOLERANCE * span.abs().max(1.0) {
            return Err(Error::InvalidGrid(format!("span {span} is not a multiple of step {h}")));
        }
        Self::over(t0, t_end, n as usize)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    /// Time of node `k`; the last node is `t_end` exactly.
    pub fn node(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            self.t0 + self.step * k as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |k| self.node(k))
    }

    /// Index of the node closest to `t` (clamped to the grid).
    pub fn nearest_node(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.step).round();
        k.clamp(0.0, self.n_steps as f64) as usize
    }
}
