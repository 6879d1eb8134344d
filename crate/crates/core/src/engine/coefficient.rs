use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Output shape of a coefficient field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Vector(usize),
    /// Row-major `rows x cols`.
    Matrix(usize, usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Vector(n) => n,
            Shape::Matrix(r, c) => r * c,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Regularity constants a field claims to satisfy. These are metadata:
/// they are checked by spot samplers, never enforced symbolically.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DeclaredConstants {
    /// Lipschitz constant in `(x, y)`.
    pub lipschitz: Option<f64>,
    /// Hölder exponent in time.
    pub holder_time: Option<f64>,
    /// `|f(t,x,y)| <= M (1 + |x| + |y|)`.
    pub sublinearity: Option<f64>,
    /// Dissipativity constant of the fast pair (declared on the fast drift).
    pub dissipativity: Option<f64>,
}

type EvalFn = dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync;

/// A named function of `(t, x, y)` with a fixed output shape.
///
/// Fields must be pure: they are called concurrently from many workers.
#[derive(Clone)]
pub struct CoefficientField {
    name: String,
    slow_dim: usize,
    fast_dim: usize,
    shape: Shape,
    eval: Arc<EvalFn>,
    constants: DeclaredConstants,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("name", &self.name)
            .field("slow_dim", &self.slow_dim)
            .field("fast_dim", &self.fast_dim)
            .field("shape", &self.shape)
            .field("constants", &self.constants)
            .finish()
    }
}

impl CoefficientField {
    pub fn new<F>(name: impl Into<String>, slow_dim: usize, fast_dim: usize, shape: Shape, eval: F) -> Self
    where
        F: Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            slow_dim,
            fast_dim,
            shape,
            eval: Arc::new(eval),
            constants: DeclaredConstants::default(),
        }
    }

    /// Scalar field of scalar `(t, x, y)`.
    pub fn scalar<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, 1, 1, Shape::Vector(1), move |t, x, y, out| out[0] = f(t, x[0], y[0]))
    }

    pub fn constant(name: impl Into<String>, slow_dim: usize, fast_dim: usize, shape: Shape, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), shape.len(), "constant field shape mismatch");
        let mut field = Self::new(name, slow_dim, fast_dim, shape, move |_, _, _, out| out.copy_from_slice(&values));
        field.constants.lipschitz = Some(0.0);
        field
    }

    pub fn zero(name: impl Into<String>, slow_dim: usize, fast_dim: usize, shape: Shape) -> Self {
        Self::constant(name, slow_dim, fast_dim, shape, vec![0.0; shape.len()])
    }

    pub fn with_constants(mut self, constants: DeclaredConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn with_dissipativity(mut self, beta: f64) -> Self {
        self.constants.dissipativity = Some(beta);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn slow_dim(&self) -> usize {
        self.slow_dim
    }

    pub fn fast_dim(&self) -> usize {
        self.fast_dim
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn constants(&self) -> &DeclaredConstants {
        &self.constants
    }

    #[inline]
    pub fn eval(&self, t: f64, x: &[f64], y: &[f64], out: &mut [f64]) {
        (self.eval)(t, x, y, out)
    }

    pub fn eval_vec(&self, t: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.shape.len()];
        self.eval(t, x, y, &mut out);
        out
    }

    /// Scalar value of a one-output field.
    pub fn eval_scalar(&self, t: f64, x: f64, y: f64) -> f64 {
        let mut out = [0.0];
        self.eval(t, &[x], &[y], &mut out);
        out[0]
    }

    pub(crate) fn expect_shape(&self, role: &str, d: usize, l: usize, shape: Shape) -> Result<()> {
        // A single output serves as either a 1-vector or a 1x1 matrix.
        let same = self.shape == shape || (self.shape.len() == 1 && shape.len() == 1);
        if self.slow_dim != d || self.fast_dim != l || !same {
            return Err(Error::DimensionMismatch(format!(
                "{role} `{}` has arity ({}, {}) -> {:?}, expected ({d}, {l}) -> {shape:?}",
                self.name, self.slow_dim, self.fast_dim, self.shape
            )));
        }
        Ok(())
    }
}
