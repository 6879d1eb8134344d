use super::{CoefficientField, Shape};
use crate::error::{Error, Result};
use crate::stochastic::CorrelationSpec;

/// Slower drift `eps^-exponent D(t, x, y)` added to the fast equation.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub field: CoefficientField,
    pub exponent: f64,
}

/// The coupled system
///
/// ```text
/// dX = b(t,X,Y) dt + sigma(t,X,Y) dW,                                   X_0 = x0
/// dY = [eps^-1 B(t,X,Y) + eps^-eta D(t,X,Y)] dt + eps^-1/2 C(t,X,Y) dW~,  Y_0 = y0
/// ```
///
/// on `[0, T]`, with `W~` correlated to `W` through a [`CorrelationSpec`].
#[derive(Debug, Clone)]
pub struct SlowFastSystem {
    pub slow_drift: CoefficientField,
    pub slow_diffusion: CoefficientField,
    pub fast_drift: CoefficientField,
    pub fast_diffusion: CoefficientField,
    pub perturbation: Option<Perturbation>,
    pub correlation: CorrelationSpec,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub horizon: f64,
}

impl SlowFastSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        slow_drift: CoefficientField,
        slow_diffusion: CoefficientField,
        fast_drift: CoefficientField,
        fast_diffusion: CoefficientField,
        correlation: CorrelationSpec,
        x0: Vec<f64>,
        y0: Vec<f64>,
        horizon: f64,
    ) -> Result<Self> {
        let system = Self {
            slow_drift,
            slow_diffusion,
            fast_drift,
            fast_diffusion,
            perturbation: None,
            correlation,
            x0,
            y0,
            horizon,
        };
        system.validate()?;
        Ok(system)
    }

    /// Adds the perturbation `eps^-exponent D`; requires `0 <= exponent < 1`.
    pub fn with_perturbation(mut self, field: CoefficientField, exponent: f64) -> Result<Self> {
        self.perturbation = Some(Perturbation { field, exponent });
        self.validate()?;
        Ok(self)
    }

    pub fn slow_dim(&self) -> usize {
        self.x0.len()
    }

    pub fn fast_dim(&self) -> usize {
        self.y0.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (d, l) = (self.slow_dim(), self.fast_dim());
        if d == 0 || l == 0 {
            return Err(Error::DimensionMismatch("slow and fast dimensions must be positive".into()));
        }
        if self.correlation.slow_dim() != d || self.correlation.fast_dim() != l {
            return Err(Error::DimensionMismatch(format!(
                "correlation is {} x {}, system is {d} x {l}",
                self.correlation.slow_dim(),
                self.correlation.fast_dim()
            )));
        }
        self.slow_drift.expect_shape("slow drift", d, l, Shape::Vector(d))?;
        self.slow_diffusion.expect_shape("slow diffusion", d, l, Shape::Matrix(d, d))?;
        self.fast_drift.expect_shape("fast drift", d, l, Shape::Vector(l))?;
        self.fast_diffusion.expect_shape("fast diffusion", d, l, Shape::Matrix(l, l))?;
        if let Some(p) = &self.perturbation {
            p.field.expect_shape("perturbation", d, l, Shape::Vector(l))?;
            if !(0.0..1.0).contains(&p.exponent) {
                return Err(Error::InvalidParameter(format!(
                    "perturbation exponent {} must lie in [0, 1)",
                    p.exponent
                )));
            }
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon {} must be positive", self.horizon)));
        }
        if self.x0.iter().chain(&self.y0).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("initial conditions must be finite".into()));
        }
        Ok(())
    }
}
