use crate::engine::{
    check_dissipativity, map_paths_observed, BoxSampler, CoefficientField, DeclaredConstants, Shape, SimOptions, SlowFastSystem,
    SubstepObserver,
};
use crate::error::{Error, Result};
use crate::stochastic::{mc_estimate, CorrelationSpec, Executor, MonteCarloEstimate, StreamFamily, TimeGrid};

/// Declared bounds of an LSV model: `|H| <= drift_bound`,
/// `vol_floor <= F <= vol_cap`, fast dissipativity constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsvBounds {
    pub drift_bound: f64,
    pub vol_floor: f64,
    pub vol_cap: f64,
    pub dissipativity: f64,
}

/// Scalar slow-fast local stochastic volatility model
///
/// ```text
/// dS = H S dt + F S dW,   dY = eps^-1 B dt + eps^-1/2 C dW~,   <W, W~> = rho t
/// ```
///
/// with every coefficient a field of `(t, x = ln s, y)`.
#[derive(Debug, Clone)]
pub struct LsvModel {
    pub drift: CoefficientField,
    pub vol: CoefficientField,
    pub fast_drift: CoefficientField,
    pub fast_diffusion: CoefficientField,
    pub rho: f64,
    pub s0: f64,
    pub y0: f64,
    pub horizon: f64,
    pub bounds: LsvBounds,
}

const VALIDATION_TRIALS: usize = 2000;
const VALIDATION_SEED: u64 = 0x5eed;

impl LsvModel {
    fn sampler(&self, seed: u64) -> BoxSampler {
        let x0 = self.s0.ln();
        BoxSampler::new((0.0, self.horizon), (x0 - 3.0, x0 + 3.0), (-5.0, 5.0), seed)
    }

    /// Checks shapes, `rho`, `s0`, the volatility bounds on a sampler and
    /// dissipativity of the fast pair.
    pub fn validate(&self) -> Result<()> {
        self.drift.expect_shape("H", 1, 1, Shape::Vector(1))?;
        self.vol.expect_shape("F", 1, 1, Shape::Vector(1))?;
        self.fast_drift.expect_shape("B", 1, 1, Shape::Vector(1))?;
        self.fast_diffusion.expect_shape("C", 1, 1, Shape::Matrix(1, 1))?;
        if !(self.rho.abs() < 1.0) {
            return Err(Error::CorrelationOutOfRange { row: 0, column: 0, value: self.rho });
        }
        if !(self.s0 > 0.0) || !(self.horizon > 0.0) || !self.y0.is_finite() {
            return Err(Error::InvalidParameter("s0 and horizon must be positive, y0 finite".into()));
        }
        let b = self.bounds;
        if !(b.vol_floor > 0.0 && b.vol_cap >= b.vol_floor) {
            return Err(Error::InvalidParameter(format!("volatility bounds [{}, {}] are invalid", b.vol_floor, b.vol_cap)));
        }
        self.check_vol(&self.vol, VALIDATION_SEED)?;
        let mut s = self.sampler(VALIDATION_SEED + 1);
        let beta = check_dissipativity(&self.fast_drift, &self.fast_diffusion, &mut s, VALIDATION_TRIALS)?;
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("fast pair is not dissipative (beta = {beta})")));
        }
        Ok(())
    }

    fn check_vol(&self, vol: &CoefficientField, seed: u64) -> Result<()> {
        let mut s = self.sampler(seed);
        let (mut x, mut y1, mut y2) = ([0.0], [0.0], [0.0]);
        let tol = 1e-12 * self.bounds.vol_cap;
        for _ in 0..VALIDATION_TRIALS {
            let t = s.sample(&mut x, &mut y1, &mut y2);
            for y in [y1[0], y2[0]] {
                let f = vol.eval_scalar(t, x[0], y);
                if !(f >= self.bounds.vol_floor - tol) {
                    return Err(Error::DegenerateVolatility { value: f, floor: self.bounds.vol_floor, t, x: x[0], y });
                }
                if f > self.bounds.vol_cap + tol {
                    return Err(Error::InvalidParameter(format!(
                        "F = {f} exceeds its declared cap {} at t = {t}, x = {}, y = {y}",
                        self.bounds.vol_cap, x[0]
                    )));
                }
            }
        }
        Ok(())
    }

    fn log_drift(&self, rate: CoefficientField) -> CoefficientField {
        let vol = self.vol.clone();
        let c = rate.constants();
        let constants = DeclaredConstants {
            lipschitz: match (c.lipschitz, vol.constants().lipschitz) {
                (Some(a), Some(b)) => Some(a + self.bounds.vol_cap * b),
                _ => None,
            },
            holder_time: None,
            sublinearity: c.sublinearity.map(|m| m + 0.5 * self.bounds.vol_cap.powi(2)),
            dissipativity: None,
        };
        CoefficientField::scalar(format!("{} - F^2/2", rate.name()), move |t, x, y| {
            let f = vol.eval_scalar(t, x, y);
            rate.eval_scalar(t, x, y) - 0.5 * f * f
        })
        .with_constants(constants)
    }

    fn vol_matrix(&self) -> CoefficientField {
        let vol = self.vol.clone();
        CoefficientField::new("F", 1, 1, Shape::Matrix(1, 1), move |t, x, y, out| vol.eval(t, x, y, out))
            .with_constants(*self.vol.constants())
    }

    /// Log-price system: `b = H - F^2/2`, `sigma = F`, `x0 = ln s0`.
    pub fn to_log_system(&self) -> Result<SlowFastSystem> {
        SlowFastSystem::new(
            self.log_drift(self.drift.clone()),
            self.vol_matrix(),
            self.fast_drift.clone(),
            self.fast_diffusion.clone(),
            CorrelationSpec::scalar(self.rho)?,
            vec![self.s0.ln()],
            vec![self.y0],
            self.horizon,
        )
    }
}

/// Short rate `r` and market price of volatility risk `gamma`.
#[derive(Debug, Clone)]
pub struct MeasureChange {
    pub short_rate: CoefficientField,
    pub vol_risk: CoefficientField,
    pub rate_bound: f64,
}

impl MeasureChange {
    pub fn new(short_rate: CoefficientField, vol_risk: CoefficientField, rate_bound: f64) -> Self {
        Self { short_rate, vol_risk, rate_bound }
    }

    /// Market price of risk `theta = (H - r) / F`.
    pub fn theta(&self, lsv: &LsvModel) -> CoefficientField {
        let (h, r, f) = (lsv.drift.clone(), self.short_rate.clone(), lsv.vol.clone());
        CoefficientField::scalar("theta", move |t, x, y| (h.eval_scalar(t, x, y) - r.eval_scalar(t, x, y)) / f.eval_scalar(t, x, y))
    }

    /// `Lambda = rho theta + sqrt(1 - rho^2) gamma`.
    pub fn lambda(&self, lsv: &LsvModel) -> CoefficientField {
        let theta = self.theta(lsv);
        let gamma = self.vol_risk.clone();
        let (rho, resid) = (lsv.rho, (1.0 - lsv.rho * lsv.rho).sqrt());
        CoefficientField::scalar("Lambda", move |t, x, y| rho * theta.eval_scalar(t, x, y) + resid * gamma.eval_scalar(t, x, y))
    }

    pub fn validate(&self, lsv: &LsvModel) -> Result<()> {
        self.short_rate.expect_shape("r", 1, 1, Shape::Vector(1))?;
        self.vol_risk.expect_shape("gamma", 1, 1, Shape::Vector(1))?;
        let mut s = lsv.sampler(VALIDATION_SEED + 2);
        let (mut x, mut y1, mut y2) = ([0.0], [0.0], [0.0]);
        for _ in 0..VALIDATION_TRIALS {
            let t = s.sample(&mut x, &mut y1, &mut y2);
            let r = self.short_rate.eval_scalar(t, x[0], y1[0]);
            if !(r.abs() <= self.rate_bound * (1.0 + 1e-12)) {
                return Err(Error::InvalidParameter(format!("|r| = {} exceeds its bound {}", r.abs(), self.rate_bound)));
            }
            if !self.vol_risk.eval_scalar(t, x[0], y1[0]).is_finite() {
                return Err(Error::InvalidParameter("gamma is not finite".into()));
            }
        }
        Ok(())
    }
}

/// The log-price system under the risk-neutral measure: slow drift
/// `r - F^2/2`, slow diffusion `F`, fast pair `(B, C)` perturbed by
/// `D = -C Lambda` at exponent 1/2.
pub fn risk_neutralize(lsv: &LsvModel, mc: &MeasureChange) -> Result<SlowFastSystem> {
    lsv.check_vol(&lsv.vol, VALIDATION_SEED)?;
    mc.validate(lsv)?;
    let lambda = mc.lambda(lsv);
    let c = lsv.fast_diffusion.clone();
    let d = CoefficientField::scalar("-C Lambda", move |t, x, y| -c.eval_scalar(t, x, y) * lambda.eval_scalar(t, x, y));
    SlowFastSystem::new(
        lsv.log_drift(mc.short_rate.clone()),
        lsv.vol_matrix(),
        lsv.fast_drift.clone(),
        lsv.fast_diffusion.clone(),
        CorrelationSpec::scalar(lsv.rho)?,
        vec![lsv.s0.ln()],
        vec![lsv.y0],
        lsv.horizon,
    )?
    .with_perturbation(d, 0.5)
}

/// Log density `sum theta_k dW_k + gamma_k dZ_k - (theta_k^2 + gamma_k^2) dt / 2`
/// for per-step values of the market prices of risk and the driver increments.
pub fn girsanov_log_weight(theta: &[f64], gamma: &[f64], dw: &[f64], dz: &[f64], dt: f64) -> f64 {
    theta
        .iter()
        .zip(gamma)
        .zip(dw.iter().zip(dz))
        .map(|((th, ga), (w, z))| th * w + ga * z - 0.5 * (th * th + ga * ga) * dt)
        .sum()
}

struct GirsanovObserver<'a> {
    theta: &'a CoefficientField,
    gamma: &'a CoefficientField,
    log_weight: f64,
}

impl SubstepObserver for GirsanovObserver<'_> {
    fn substep(&mut self, t: f64, dt: f64, x: &[f64], y: &[f64], dw: &[f64], dz: &[f64]) {
        let th = self.theta.eval_scalar(t, x[0], y[0]);
        let ga = self.gamma.eval_scalar(t, x[0], y[0]);
        self.log_weight += th * dw[0] + ga * dz[0] - 0.5 * (th * th + ga * ga) * dt;
    }
}

/// Per-path density `dQ/dP` accumulated along objective-measure paths of
/// the log system, with the market prices of risk evaluated at the left
/// point of every integrator substep.
#[allow(clippy::too_many_arguments)]
pub fn girsanov_weights(
    lsv: &LsvModel,
    mc: &MeasureChange,
    eps: f64,
    grid: &TimeGrid,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
    opts: &SimOptions,
) -> Result<Vec<f64>> {
    let system = lsv.to_log_system()?;
    let theta = mc.theta(lsv);
    let gamma = &mc.vol_risk;
    map_paths_observed(
        &system,
        eps,
        grid,
        opts,
        false,
        n_paths,
        streams,
        exec,
        |_| GirsanovObserver { theta: &theta, gamma, log_weight: 0.0 },
        |_, _, obs| Ok(obs.log_weight.exp()),
    )
}

/// Monte Carlo mean of `dQ/dP`; equals 1 for an exponential martingale.
#[allow(clippy::too_many_arguments)]
pub fn girsanov_weight(
    lsv: &LsvModel,
    mc: &MeasureChange,
    eps: f64,
    grid: &TimeGrid,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
    opts: &SimOptions,
) -> Result<MonteCarloEstimate> {
    mc_estimate(&girsanov_weights(lsv, mc, eps, grid, n_paths, streams, exec, opts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, Params};

    fn constant(name: &str, v: f64) -> CoefficientField {
        CoefficientField::constant(name, 1, 1, Shape::Vector(1), vec![v])
    }

    fn bs_model(h: f64, f: f64) -> LsvModel {
        let (b, c) = catalog::ou_linear(&Params::new()).unwrap();
        LsvModel {
            drift: constant("H", h),
            vol: constant("F", f),
            fast_drift: b,
            fast_diffusion: c,
            rho: 0.0,
            s0: 1.0,
            y0: 0.0,
            horizon: 1.0,
            bounds: LsvBounds { drift_bound: h.abs(), vol_floor: f, vol_cap: f, dissipativity: 2.0 },
        }
    }

    #[test]
    fn log_system_of_constants() {
        let sys = bs_model(0.05, 0.2).to_log_system().unwrap();
        assert!((sys.slow_drift.eval_scalar(0.0, 0.0, 0.0) - 0.03).abs() < 1e-15);
        assert_eq!(sys.slow_diffusion.eval_scalar(0.0, 0.0, 0.0), 0.2);
        assert_eq!(sys.x0, vec![0.0]);
    }

    #[test]
    fn lsv_tanh_log_system_at_zero() {
        let (m, _) = catalog::lsv_tanh(&Params::new()).unwrap();
        let sys = m.to_log_system().unwrap();
        assert_eq!(sys.slow_diffusion.eval_scalar(0.0, 0.0, 0.0), 0.25);
        assert!((sys.slow_drift.eval_scalar(0.0, 0.0, 0.0) - (0.05 - 0.03125)).abs() < 1e-15);
    }

    #[test]
    fn theta_and_lambda() {
        let (m, mc) = catalog::lsv_tanh(&Params::new()).unwrap();
        assert!((mc.theta(&m).eval_scalar(0.0, 0.0, 0.0) - 0.12).abs() < 1e-15);
        let expected = 0.3 * 0.12 + 0.91f64.sqrt() * 0.1;
        assert!((mc.lambda(&m).eval_scalar(0.0, 0.0, 0.0) - expected).abs() < 1e-15);
        assert!((expected - 0.131394).abs() < 1e-6);
    }

    #[test]
    fn neutral_measure_leaves_fast_equation_alone() {
        let mut m = bs_model(0.02, 0.25);
        m.rho = 0.0;
        let mc = MeasureChange::new(constant("r", 0.02), constant("gamma", 0.0), 0.02);
        let rn = risk_neutralize(&m, &mc).unwrap();
        let obj = m.to_log_system().unwrap();
        let d = &rn.perturbation.as_ref().unwrap().field;
        for y in [-2.0, 0.0, 1.5] {
            assert_eq!(d.eval_scalar(0.3, 0.1, y), 0.0);
            assert_eq!(rn.fast_drift.eval_scalar(0.3, 0.1, y), obj.fast_drift.eval_scalar(0.3, 0.1, y));
        }
        assert_eq!(rn.perturbation.as_ref().unwrap().exponent, 0.5);
    }

    #[test]
    fn degenerate_volatility_is_rejected() {
        let (mut m, mc) = catalog::lsv_tanh(&Params::new()).unwrap();
        m.vol = CoefficientField::scalar("F", |_, _, y| 0.25 * y.tanh());
        assert!(matches!(risk_neutralize(&m, &mc), Err(Error::DegenerateVolatility { .. })));
    }

    #[test]
    fn deterministic_weight() {
        // Constant theta = 0.12, gamma = 0.1 over T = 1 in 4 steps.
        let dw = [0.3, -0.1, 0.25, 0.05];
        let dz = [-0.2, 0.4, 0.1, -0.1];
        let (w, z): (f64, f64) = (dw.iter().sum(), dz.iter().sum());
        let lw = girsanov_log_weight(&[0.12; 4], &[0.1; 4], &dw, &dz, 0.25);
        let expected = (0.12 * w - 0.0072 - 0.005).exp() * (0.1 * z).exp();
        assert!((lw.exp() - expected).abs() < 1e-14);
        assert_eq!(girsanov_log_weight(&[0.0; 4], &[0.0; 4], &dw, &dz, 0.25), 0.0);
    }

    #[test]
    fn zero_prices_of_risk_give_unit_weights() {
        let m = bs_model(0.02, 0.25);
        let mc = MeasureChange::new(constant("r", 0.02), constant("gamma", 0.0), 0.02);
        let grid = TimeGrid::with_step(0.0, 1.0, 0.01).unwrap();
        let w = girsanov_weights(&m, &mc, 0.1, &grid, 16, StreamFamily::new(0, 0), &Executor::single(), &SimOptions::default())
            .unwrap();
        assert!(w.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn weight_has_unit_mean() {
        let (m, mc) = catalog::lsv_tanh(&Params::new()).unwrap();
        let grid = TimeGrid::with_step(0.0, 1.0, 0.01).unwrap();
        let est = girsanov_weight(&m, &mc, 0.1, &grid, 100_000, StreamFamily::new(6, 0), &Executor::single(), &SimOptions::default())
            .unwrap();
        assert!(est.within(1.0, 3.0), "{est:?}");
    }
}
