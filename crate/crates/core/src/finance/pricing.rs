use std::io::Write;
use std::time::Instant;

use super::{LocalVolModel, OptionSpec};
use crate::engine::{map_paths, CoefficientField, SimOptions, SlowFastSystem, DEFAULT_OVERFLOW_GUARD};
use crate::error::{Error, Result};
use crate::stochastic::{mc_estimate, Executor, MonteCarloEstimate, StreamFamily, TimeGrid};

/// What the option is priced under.
#[derive(Debug, Clone, Copy)]
pub enum PricingModel<'a> {
    /// Risk-neutral log-price slow-fast system at a given epsilon; the
    /// discount integrates `short_rate` along the simulated path.
    SlowFast { system: &'a SlowFastSystem, short_rate: &'a CoefficientField, eps: f64, opts: SimOptions },
    LocalVol(&'a LocalVolModel),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingSettings {
    pub step: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub sim: SimOptions,
}

#[inline]
fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    h * (0.5 * (values[0] + values[n]) + values[1..n].iter().sum::<f64>())
}

/// Discounted payoffs `exp(-int r) Psi` per option (outer) and path (inner),
/// all options evaluated on the same paths.
pub fn discounted_payoffs(
    model: PricingModel,
    specs: &[OptionSpec],
    step: f64,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
) -> Result<Vec<Vec<f64>>> {
    let Some(first) = specs.first() else { return Ok(Vec::new()) };
    for s in specs {
        s.validate()?;
        if s.maturity != first.maturity {
            return Err(Error::InvalidParameter("options priced together must share a maturity".into()));
        }
    }
    let grid = TimeGrid::with_step(0.0, first.maturity, step)?;
    let h = grid.step();
    let evaluate = |prices: &[f64], rates: &[f64]| -> Result<Vec<f64>> {
        let discount = (-trapezoid(rates, h)).exp();
        specs.iter().map(|s| Ok(discount * s.payoff(prices, h)?)).collect()
    };
    let per_path: Vec<Vec<f64>> = match model {
        PricingModel::SlowFast { system, short_rate, eps, opts } => {
            if system.slow_dim() != 1 || system.fast_dim() != 1 {
                return Err(Error::DimensionMismatch("pricing needs a scalar log-price system".into()));
            }
            map_paths(system, eps, &grid, &opts, false, n_paths, streams, exec, |_, rec| {
                let prices: Vec<f64> = rec.slow.iter().map(|x| x.exp()).collect();
                let rates: Vec<f64> = (0..grid.n_nodes())
                    .map(|k| short_rate.eval_scalar(grid.node(k), rec.slow[k], rec.fast[k]))
                    .collect();
                evaluate(&prices, &rates)
            })?
        }
        PricingModel::LocalVol(lv) => exec.map(
            n_paths,
            || (vec![0.0; grid.n_nodes()], vec![0.0; grid.n_nodes()]),
            |(prices, rates), p| {
                let mut source = streams.stream(p).source();
                let sq = h.sqrt();
                let mut x = lv.s0.ln();
                for k in 0..grid.n_steps() {
                    let s = x.exp();
                    let (r, f, _) = lv.eval(grid.node(k), s);
                    prices[k] = s;
                    rates[k] = r;
                    x += (r - 0.5 * f * f) * h + f * sq * source.next_normal();
                    if !(x.abs() <= DEFAULT_OVERFLOW_GUARD) {
                        return Err(Error::NumericalBlowup { path: p, time: grid.node(k + 1) });
                    }
                }
                let n = grid.n_steps();
                prices[n] = x.exp();
                rates[n] = lv.eval(grid.t_end(), prices[n]).0;
                evaluate(prices, rates)
            },
        )?,
    };
    Ok((0..specs.len()).map(|j| per_path.iter().map(|v| v[j]).collect()).collect())
}

/// Monte Carlo price at time 0.
pub fn price(
    model: PricingModel,
    spec: &OptionSpec,
    step: f64,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
) -> Result<MonteCarloEstimate> {
    let payoffs = discounted_payoffs(model, std::slice::from_ref(spec), step, n_paths, streams, exec)?;
    mc_estimate(&payoffs[0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceRow {
    pub epsilon: f64,
    pub estimate: MonteCarloEstimate,
    /// `|P^eps - Pbar|` (0 on the limit row).
    pub gap: f64,
    /// Combined SE of the gap.
    pub gap_se: f64,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub rows: Vec<PriceRow>,
    pub limit: PriceRow,
}

impl PriceTable {
    pub const CSV_HEADER: [&'static str; 6] = ["epsilon", "price", "std_error", "n_paths", "gap_vs_limit", "wall_ms"];

    /// Rows in epsilon order followed by the limit row (`epsilon = 0`);
    /// `wall_ms` is 0 unless `record_wall` is set.
    pub fn write_csv<W: Write>(&self, writer: W, record_wall: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::CSV_HEADER)?;
        for row in self.rows.iter().chain(std::iter::once(&self.limit)) {
            w.write_record([
                row.epsilon.to_string(),
                row.estimate.mean.to_string(),
                row.estimate.std_error.to_string(),
                row.estimate.n_samples.to_string(),
                row.gap.to_string(),
                (if record_wall { row.wall_ms } else { 0 }).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Prices `spec` under the risk-neutral slow-fast system for every epsilon
/// and under the local-volatility limit, with independent streams per cell
/// (limit in cell 0, epsilon `i` in cell `1 + i`).
pub fn price_convergence_experiment(
    system: &SlowFastSystem,
    short_rate: &CoefficientField,
    limit: &LocalVolModel,
    spec: &OptionSpec,
    eps_list: &[f64],
    settings: &PricingSettings,
    exec: &Executor,
) -> Result<PriceTable> {
    spec.validate()?;
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(format!("epsilon list {eps_list:?} must be strictly decreasing in (0, 1)")));
    }
    let start = Instant::now();
    let lim = price(
        PricingModel::LocalVol(limit),
        spec,
        settings.step,
        settings.n_paths,
        StreamFamily::new(settings.seed, 0),
        exec,
    )?;
    let limit_row = PriceRow { epsilon: 0.0, estimate: lim, gap: 0.0, gap_se: 0.0, wall_ms: start.elapsed().as_millis() };
    let mut rows = Vec::with_capacity(eps_list.len());
    for (i, &eps) in eps_list.iter().enumerate() {
        let start = Instant::now();
        let model = PricingModel::SlowFast { system, short_rate, eps, opts: settings.sim };
        let est = price(model, spec, settings.step, settings.n_paths, StreamFamily::new(settings.seed, 1 + i as u32), exec)?;
        log::info!("epsilon {eps}: price {} +- {}", est.mean, est.std_error);
        rows.push(PriceRow {
            epsilon: eps,
            gap: (est.mean - lim.mean).abs(),
            gap_se: est.std_error.hypot(lim.std_error),
            estimate: est,
            wall_ms: start.elapsed().as_millis(),
        });
    }
    Ok(PriceTable { rows, limit: limit_row })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, Params};
    use crate::finance::{risk_neutralize, CustomPayoff, OptionKind};

    fn rn() -> (SlowFastSystem, CoefficientField) {
        let (lsv, mc) = catalog::lsv_tanh(&Params::new()).unwrap();
        (risk_neutralize(&lsv, &mc).unwrap(), mc.short_rate.clone())
    }

    #[test]
    fn constant_payoff_discounts_exactly() {
        let (sys, r) = rn();
        let spec = OptionSpec {
            kind: OptionKind::Custom(CustomPayoff::Constant(1.0)),
            strike: 0.0,
            cap: Some(1.0),
            maturity: 1.0,
        };
        let model = PricingModel::SlowFast { system: &sys, short_rate: &r, eps: 0.2, opts: SimOptions::default() };
        let est = price(model, &spec, 0.01, 50, StreamFamily::new(1, 1), &Executor::single()).unwrap();
        assert!((est.mean - (-0.02f64).exp()).abs() < 1e-15, "{}", est.mean);
        assert!(est.std_error < 1e-15);
        let lv = LocalVolModel::constant(0.02, 0.25, 1.0, 1.0).unwrap();
        let est = price(PricingModel::LocalVol(&lv), &spec, 0.01, 10, StreamFamily::new(1, 0), &Executor::single()).unwrap();
        assert!((est.mean - (-0.02f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn missing_cap_fails_before_simulation() {
        let (sys, r) = rn();
        let spec = OptionSpec { cap: None, ..OptionSpec::european(1.0, 2.0, 1.0) };
        let model = PricingModel::SlowFast { system: &sys, short_rate: &r, eps: 0.2, opts: SimOptions::default() };
        assert_eq!(price(model, &spec, 0.01, 10, StreamFamily::new(1, 1), &Executor::single()), Err(Error::UnboundedPayoff));
    }

    #[test]
    fn discounted_price_is_a_martingale() {
        let (sys, r) = rn();
        let spec = OptionSpec::european(0.0, 10.0, 1.0);
        let model = PricingModel::SlowFast { system: &sys, short_rate: &r, eps: 0.1, opts: SimOptions::default() };
        let est = price(model, &spec, 0.01, 40_000, StreamFamily::new(2, 1), &Executor::single()).unwrap();
        assert!(est.within(1.0, 3.0), "{est:?}");
    }

    #[test]
    fn shared_paths_are_linear_and_monotone() {
        let (sys, r) = rn();
        let call = OptionSpec::european(1.0, 0.3, 1.0);
        let digital = OptionSpec { kind: OptionKind::Custom(CustomPayoff::Digital { strike: 1.1, amount: 0.2 }), ..call };
        let lower_strike = OptionSpec { strike: 0.9, ..call };
        let higher_cap = OptionSpec { cap: Some(0.5), ..call };
        let model = PricingModel::SlowFast { system: &sys, short_rate: &r, eps: 0.2, opts: SimOptions::default() };
        let out = discounted_payoffs(model, &[call, digital, lower_strike, higher_cap], 0.01, 2000, StreamFamily::new(3, 1), &Executor::single())
            .unwrap();
        let sum: Vec<f64> = out[0].iter().zip(&out[1]).map(|(a, b)| a + b).collect();
        let combined = mc_estimate(&sum).unwrap().mean;
        let separate = mc_estimate(&out[0]).unwrap().mean + mc_estimate(&out[1]).unwrap().mean;
        assert!((combined - separate).abs() < 1e-12);
        for (p, &base) in out[0].iter().enumerate() {
            assert!(out[2][p] >= base);
            assert!(out[3][p] >= base);
        }
    }

    #[test]
    fn y_free_volatility_has_no_gap() {
        let (mut lsv, mc) = catalog::lsv_tanh(&Params::new()).unwrap();
        lsv.vol = CoefficientField::scalar("F", |_, _, _| 0.25);
        let sys = risk_neutralize(&lsv, &mc).unwrap();
        let limit = LocalVolModel::constant(0.02, 0.25, 1.0, 1.0).unwrap();
        let settings = PricingSettings { step: 0.01, n_paths: 20_000, seed: 4, sim: SimOptions::default() };
        let table = price_convergence_experiment(
            &sys,
            &mc.short_rate,
            &limit,
            &OptionSpec::european(1.0, 2.0, 1.0),
            &[0.2, 0.05],
            &settings,
            &Executor::single(),
        )
        .unwrap();
        for row in &table.rows {
            assert!(row.gap < 3.0 * row.gap_se, "{row:?}");
        }
        let mut buf = Vec::new();
        table.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epsilon,price,std_error,n_paths,gap_vs_limit,wall_ms\n0.2,"));
        assert!(text.lines().last().unwrap().starts_with("0,"));
    }
}
