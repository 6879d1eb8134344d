use crate::error::{Error, Result};

/// Tolerance for the column-norm and column-orthogonality checks.
pub const CORRELATION_TOLERANCE: f64 = 1e-12;

/// Correlation between the `d` slow drivers `W` and the `l` fast drivers.
///
/// The fast driver is built as
/// `W~_j = sum_i rho_ij W_i + sqrt(1 - sum_i rho_ij^2) Z_j`
/// with `Z` independent of `W`, so that `E[dW_i dW~_j] = rho_ij dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSpec {
    d: usize,
    l: usize,
    /// Row-major `d x l`.
    rho: Vec<f64>,
    residual: Vec<f64>,
}

impl CorrelationSpec {
    /// Validates a row-major `d x l` correlation matrix.
    pub fn new(d: usize, l: usize, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != d * l {
            return Err(Error::DimensionMismatch(format!(
                "correlation has {} entries, expected {d} x {l}",
                rho.len()
            )));
        }
        for i in 0..d {
            for j in 0..l {
                let value = rho[i * l + j];
                if !(value > -1.0 && value < 1.0) {
                    return Err(Error::CorrelationOutOfRange { row: i, column: j, value });
                }
            }
        }
        let mut residual = Vec::with_capacity(l);
        for j in 0..l {
            let norm_sq: f64 = (0..d).map(|i| rho[i * l + j].powi(2)).sum();
            if norm_sq > 1.0 + CORRELATION_TOLERANCE {
                return Err(Error::ColumnNormViolation { column: j, norm_sq });
            }
            residual.push((1.0 - norm_sq).max(0.0).sqrt());
        }
        for j in 0..l {
            for k in (j + 1)..l {
                let inner: f64 = (0..d).map(|i| rho[i * l + j] * rho[i * l + k]).sum();
                if inner.abs() > CORRELATION_TOLERANCE {
                    return Err(Error::OrthogonalityViolation { first: j, second: k, inner });
                }
            }
        }
        Ok(Self { d, l, rho, residual })
    }

    /// Independent slow and fast drivers.
    pub fn independent(d: usize, l: usize) -> Self {
        Self { d, l, rho: vec![0.0; d * l], residual: vec![1.0; l] }
    }

    /// Scalar correlation between a one-dimensional slow and fast driver.
    pub fn scalar(rho: f64) -> Result<Self> {
        Self::new(1, 1, vec![rho])
    }

    pub fn slow_dim(&self) -> usize {
        self.d
    }

    pub fn fast_dim(&self) -> usize {
        self.l
    }

    pub fn rho(&self, i: usize, j: usize) -> f64 {
        self.rho[i * self.l + j]
    }

    /// Weights `sqrt(1 - sum_i rho_ij^2)` on the independent drivers, in `[0, 1]`.
    pub fn residual_weights(&self) -> &[f64] {
        &self.residual
    }

    /// `dw_tilde_j = sum_i rho_ij dw_i + residual_j dz_j`.
    #[inline]
    pub fn mix(&self, dw: &[f64], dz: &[f64], dw_tilde: &mut [f64]) {
        for j in 0..self.l {
            let mut acc = self.residual[j] * dz[j];
            for (i, w) in dw.iter().enumerate().take(self.d) {
                acc += self.rho[i * self.l + j] * w;
            }
            dw_tilde[j] = acc;
        }
    }
}

/// Builds a [`CorrelationSpec`] from the rows of a `d x l` matrix.
pub fn build_correlation(rows: &[Vec<f64>]) -> Result<CorrelationSpec> {
    let d = rows.len();
    let l = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != l) {
        return Err(Error::DimensionMismatch("ragged correlation matrix".into()));
    }
    CorrelationSpec::new(d, l, rows.concat())
}
