use crate::catalog::unknown;
use crate::error::{Error, Result};

/// Names accepted by [`Functional::by_name`].
pub const FUNCTIONALS: [&str; 6] = ["cos", "tanh", "sup-tanh", "capped-square", "cos@mid", "tanh@mid"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalKind {
    Cos,
    Tanh,
    SupTanh,
    /// `min(x^2, cap)`.
    CappedSquare(f64),
}

/// Where a functional reads the path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    Terminal,
    Midpoint,
    WholePath,
}

/// A bounded continuous functional of the first slow component.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    pub name: String,
    pub kind: FunctionalKind,
    pub at: Evaluation,
    pub bound: f64,
}

impl Functional {
    pub fn by_name(name: &str) -> Result<Self> {
        let (kind, at) = match name {
            "cos" => (FunctionalKind::Cos, Evaluation::Terminal),
            "tanh" => (FunctionalKind::Tanh, Evaluation::Terminal),
            "sup-tanh" => (FunctionalKind::SupTanh, Evaluation::WholePath),
            "capped-square" => (FunctionalKind::CappedSquare(4.0), Evaluation::Terminal),
            "cos@mid" => (FunctionalKind::Cos, Evaluation::Midpoint),
            "tanh@mid" => (FunctionalKind::Tanh, Evaluation::Midpoint),
            other => return Err(unknown("functional", other, &FUNCTIONALS)),
        };
        let bound = match kind {
            FunctionalKind::CappedSquare(cap) => cap,
            _ => 1.0,
        };
        Ok(Self { name: name.to_string(), kind, at, bound })
    }

    /// Node index whose marginal the functional reads (`n_steps` for path functionals).
    pub fn node(&self, n_steps: usize) -> usize {
        match self.at {
            Evaluation::Midpoint => n_steps / 2,
            Evaluation::Terminal | Evaluation::WholePath => n_steps,
        }
    }

    #[inline]
    fn point(&self, x: f64) -> f64 {
        match self.kind {
            FunctionalKind::Cos => x.cos(),
            FunctionalKind::Tanh | FunctionalKind::SupTanh => x.tanh(),
            FunctionalKind::CappedSquare(cap) => (x * x).min(cap),
        }
    }

    /// Evaluates on node values `path[0..=n_steps]`, enforcing the bound.
    pub fn eval(&self, path: &[f64]) -> Result<f64> {
        let n = path.len() - 1;
        let v = match self.at {
            Evaluation::WholePath => path.iter().map(|&x| self.point(x)).fold(f64::NEG_INFINITY, f64::max),
            _ => self.point(path[self.node(n)]),
        };
        if !(v.abs() <= self.bound) {
            return Err(Error::UnboundedFunctional { name: self.name.clone(), value: v, bound: self.bound });
        }
        Ok(v)
    }
}
