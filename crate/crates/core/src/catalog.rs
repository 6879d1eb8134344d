//! Named parametric model families selectable from configuration.
//!
//! Every constructor takes a [`Params`] map; unknown keys are rejected so a
//! typo never silently falls back to a default.

use std::collections::{BTreeMap, BTreeSet};

use crate::engine::{CoefficientField, DeclaredConstants, Shape, SlowFastSystem};
use crate::ergodic::AveragedModel;
use crate::error::{Error, Result};
use crate::finance::{LsvBounds, LsvModel, MeasureChange};
use crate::stochastic::CorrelationSpec;

pub type Params = BTreeMap<String, f64>;

/// Names accepted by [`system`].
pub const SYSTEMS: [&str; 5] = ["zero", "constant", "ou-linear", "ref-ou", "lsv-tanh"];

/// Reads parameters with defaults and reports keys that were never read.
pub struct ParamReader<'a> {
    entry: &'static str,
    params: &'a Params,
    seen: BTreeSet<&'static str>,
}

impl<'a> ParamReader<'a> {
    pub fn new(entry: &'static str, params: &'a Params) -> Self {
        Self { entry, params, seen: BTreeSet::new() }
    }

    pub fn get(&mut self, key: &'static str, default: f64) -> Result<f64> {
        self.seen.insert(key);
        let v = self.params.get(key).copied().unwrap_or(default);
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!("{}.{key} = {v} is not finite", self.entry)));
        }
        Ok(v)
    }

    pub fn positive(&mut self, key: &'static str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if v <= 0.0 {
            return Err(Error::InvalidParameter(format!("{}.{key} = {v} must be positive", self.entry)));
        }
        Ok(v)
    }

    pub fn finish(self) -> Result<()> {
        let unknown: Vec<&str> =
            self.params.keys().map(String::as_str).filter(|k| !self.seen.contains(k)).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            let known: Vec<&str> = self.seen.iter().copied().collect();
            Err(Error::InvalidParameter(format!(
                "{}: unknown parameter(s) {}; accepted: {}",
                self.entry,
                unknown.join(", "),
                known.join(", ")
            )))
        }
    }
}

/// Builds the named slow-fast system. `lsv-tanh` yields its objective
/// log-price system.
pub fn system(name: &str, params: &Params) -> Result<SlowFastSystem> {
    match name {
        "zero" => {
            ParamReader::new("zero", params).finish()?;
            Ok(zero_system())
        }
        "constant" => constant_system(params),
        "ou-linear" => ou_linear_system(params),
        "ref-ou" => ref_ou(params),
        "lsv-tanh" => lsv_tanh(params)?.0.to_log_system(),
        other => Err(unknown("model", other, &SYSTEMS)),
    }
}

pub(crate) fn unknown(kind: &'static str, name: &str, available: &[&str]) -> Error {
    Error::UnknownCatalogEntry { kind, name: name.to_string(), available: available.join(", ") }
}

/// All coefficients zero, `d = l = 1`, `x0 = y0 = 0`, `T = 1`.
pub fn zero_system() -> SlowFastSystem {
    let z = |name: &str, shape| CoefficientField::zero(name, 1, 1, shape);
    SlowFastSystem::new(
        z("b", Shape::Vector(1)),
        z("sigma", Shape::Matrix(1, 1)),
        z("B", Shape::Vector(1)),
        z("C", Shape::Matrix(1, 1)),
        CorrelationSpec::independent(1, 1),
        vec![0.0],
        vec![0.0],
        1.0,
    )
    .expect("zero system is valid")
}

/// Fast OU pair `B = -kappa (y - mean)`, `C = c`.
///
/// Parameters: `kappa` (2), `c` (1), `mean` (0).
pub fn ou_linear(params: &Params) -> Result<(CoefficientField, CoefficientField)> {
    let mut r = ParamReader::new("ou-linear", params);
    let pair = ou_pair(&mut r)?;
    r.finish()?;
    Ok(pair)
}

fn ou_pair(r: &mut ParamReader) -> Result<(CoefficientField, CoefficientField)> {
    let kappa = r.positive("kappa", 2.0)?;
    let c = r.get("c", 1.0)?;
    let mean = r.get("mean", 0.0)?;
    let b = CoefficientField::scalar("ou-drift", move |_, _, y| -kappa * (y - mean)).with_constants(DeclaredConstants {
        lipschitz: Some(kappa),
        holder_time: Some(1.0),
        sublinearity: Some(kappa * (1.0 + mean.abs())),
        dissipativity: Some(kappa),
    });
    let c = CoefficientField::scalar("ou-diffusion", move |_, _, _| c).with_constants(DeclaredConstants {
        lipschitz: Some(0.0),
        holder_time: Some(1.0),
        sublinearity: Some(c.abs()),
        dissipativity: None,
    });
    Ok((b, c))
}

#[allow(clippy::too_many_arguments)]
fn finish_system(
    r: ParamReader,
    b: CoefficientField,
    sigma: CoefficientField,
    pair: (CoefficientField, CoefficientField),
    rho: f64,
    x0: f64,
    y0: f64,
    horizon: f64,
) -> Result<SlowFastSystem> {
    r.finish()?;
    SlowFastSystem::new(b, sigma, pair.0, pair.1, CorrelationSpec::scalar(rho)?, vec![x0], vec![y0], horizon)
}

/// `b = drift`, `sigma = sigma` (both constant) with an OU fast pair.
///
/// Parameters: `drift` (0), `sigma` (1), `kappa`, `c`, `mean`, `rho` (0),
/// `x0` (0), `y0` (0), `horizon` (1).
pub fn constant_system(params: &Params) -> Result<SlowFastSystem> {
    let mut r = ParamReader::new("constant", params);
    let drift = r.get("drift", 0.0)?;
    let sigma = r.get("sigma", 1.0)?;
    let pair = ou_pair(&mut r)?;
    let (rho, x0, y0, horizon) = (r.get("rho", 0.0)?, r.get("x0", 0.0)?, r.get("y0", 0.0)?, r.positive("horizon", 1.0)?);
    let b = CoefficientField::constant("b", 1, 1, Shape::Vector(1), vec![drift]);
    let s = CoefficientField::constant("sigma", 1, 1, Shape::Matrix(1, 1), vec![sigma]);
    finish_system(r, b, s, pair, rho, x0, y0, horizon)
}

/// `b = y - a x`, `sigma` constant, OU fast pair; the averaged drift is
/// `mean - a x`.
///
/// Parameters: `a` (1), `sigma` (1), `kappa`, `c`, `mean`, `rho` (0), `x0` (1),
/// `y0` (0), `horizon` (1).
pub fn ou_linear_system(params: &Params) -> Result<SlowFastSystem> {
    let mut r = ParamReader::new("ou-linear", params);
    let a = r.get("a", 1.0)?;
    let sigma = r.get("sigma", 1.0)?;
    let pair = ou_pair(&mut r)?;
    let (rho, x0, y0, horizon) = (r.get("rho", 0.0)?, r.get("x0", 1.0)?, r.get("y0", 0.0)?, r.positive("horizon", 1.0)?);
    let b = CoefficientField::scalar("b", move |_, x, y| y - a * x);
    let s = CoefficientField::constant("sigma", 1, 1, Shape::Matrix(1, 1), vec![sigma]);
    finish_system(r, b, s, pair, rho, x0, y0, horizon)
}

/// Reference system `b = sin y - x`, `sigma = sqrt(2 + cos 2y)`,
/// `B = -kappa y`, `C = c`.
///
/// Parameters: `kappa` (2), `c` (1), `rho` (0.3), `x0` (1), `y0` (0),
/// `horizon` (1).
pub fn ref_ou(params: &Params) -> Result<SlowFastSystem> {
    let mut r = ParamReader::new("ref-ou", params);
    let kappa = r.positive("kappa", 2.0)?;
    let c = r.get("c", 1.0)?;
    let pair = {
        let mut sub = Params::new();
        sub.insert("kappa".into(), kappa);
        sub.insert("c".into(), c);
        ou_linear(&sub)?
    };
    let (rho, x0, y0, horizon) = (r.get("rho", 0.3)?, r.get("x0", 1.0)?, r.get("y0", 0.0)?, r.positive("horizon", 1.0)?);
    let b = CoefficientField::scalar("b", |_, x, y| y.sin() - x).with_constants(DeclaredConstants {
        lipschitz: Some(std::f64::consts::SQRT_2),
        holder_time: Some(1.0),
        sublinearity: Some(1.0),
        dissipativity: None,
    });
    let s = CoefficientField::scalar("sigma", |_, _, y| (2.0 + (2.0 * y).cos()).sqrt()).with_constants(DeclaredConstants {
        lipschitz: Some(1.0),
        holder_time: Some(1.0),
        sublinearity: Some(3f64.sqrt()),
        dissipativity: None,
    });
    finish_system(r, b, s, pair, rho, x0, y0, horizon)
}

/// Reference LSV model with `F = f0 + f1 tanh y` and constant `H`, `r`,
/// `gamma`, together with its measure change.
///
/// Parameters: `H` (0.05), `r` (0.02), `f0` (0.25), `f1` (0.05), `kappa` (2),
/// `c` (1), `rho` (0.3), `gamma` (0.1), `s0` (1), `y0` (0), `horizon` (1).
pub fn lsv_tanh(params: &Params) -> Result<(LsvModel, MeasureChange)> {
    let mut r = ParamReader::new("lsv-tanh", params);
    let h = r.get("H", 0.05)?;
    let rate = r.get("r", 0.02)?;
    let f0 = r.positive("f0", 0.25)?;
    let f1 = r.get("f1", 0.05)?;
    let kappa = r.positive("kappa", 2.0)?;
    let c = r.get("c", 1.0)?;
    let rho = r.get("rho", 0.3)?;
    let gamma = r.get("gamma", 0.1)?;
    let s0 = r.positive("s0", 1.0)?;
    let y0 = r.get("y0", 0.0)?;
    let horizon = r.positive("horizon", 1.0)?;
    r.finish()?;
    if f0 - f1.abs() <= 0.0 {
        return Err(Error::InvalidParameter(format!("lsv-tanh: f0 - |f1| = {} must be positive", f0 - f1.abs())));
    }
    let mut sub = Params::new();
    sub.insert("kappa".into(), kappa);
    sub.insert("c".into(), c);
    let (fast_drift, fast_diffusion) = ou_linear(&sub)?;
    let model = LsvModel {
        drift: CoefficientField::constant("H", 1, 1, Shape::Vector(1), vec![h]),
        vol: CoefficientField::scalar("F", move |_, _, y| f0 + f1 * y.tanh()).with_constants(DeclaredConstants {
            lipschitz: Some(f1.abs()),
            holder_time: Some(1.0),
            sublinearity: Some(f0 + f1.abs()),
            dissipativity: None,
        }),
        fast_drift,
        fast_diffusion,
        rho,
        s0,
        y0,
        horizon,
        bounds: LsvBounds {
            drift_bound: h.abs(),
            vol_floor: f0 - f1.abs(),
            vol_cap: f0 + f1.abs(),
            dissipativity: kappa,
        },
    };
    model.validate()?;
    let mc = MeasureChange::new(
        CoefficientField::constant("r", 1, 1, Shape::Vector(1), vec![rate]),
        CoefficientField::constant("gamma", 1, 1, Shape::Vector(1), vec![gamma]),
        rate.abs(),
    );
    Ok((model, mc))
}

/// The averaged model of a catalog system when it is known in closed form:
/// every entry except `lsv-tanh`, whose `Fbar` needs quadrature.
///
/// With `Y ~ N(mean, v)`, `v = c^2 / (2 kappa)`: `ref-ou` has `bbar = -x`
/// and `sigmabar^2 = 2 + exp(-2v)`; the linear families average `y` to
/// `mean`.
pub fn averaged_closed_form(name: &str, params: &Params) -> Result<Option<AveragedModel>> {
    system(name, params)?;
    let p = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    let line = |slope: f64, intercept: f64, sigma: f64| -> Result<AveragedModel> {
        AveragedModel::closed_form(
            CoefficientField::new("bbar", 1, 0, Shape::Vector(1), move |_, x, _, out| out[0] = intercept + slope * x[0]),
            CoefficientField::constant("sigmabar", 1, 0, Shape::Matrix(1, 1), vec![sigma.abs()]),
        )
    };
    Ok(Some(match name {
        "zero" => line(0.0, 0.0, 0.0)?,
        "constant" => line(0.0, p("drift", 0.0), p("sigma", 1.0))?,
        "ou-linear" => line(-p("a", 1.0), p("mean", 0.0), p("sigma", 1.0))?,
        "ref-ou" => {
            let v = p("c", 1.0).powi(2) / (2.0 * p("kappa", 2.0));
            line(-1.0, 0.0, (2.0 + (-2.0 * v).exp()).sqrt())?
        }
        _ => return Ok(None),
    }))
}
