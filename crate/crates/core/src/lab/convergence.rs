use std::io::Write;
use std::time::Instant;

use super::averaged::{extrapolation_warning, AveragedSimulator};
use super::Functional;
use crate::engine::{map_paths, PathSimulator, SimOptions, SlowFastSystem};
use crate::ergodic::AveragedModel;
use crate::error::{Error, Result, Warning};
use crate::stochastic::{ks_two_sample, mc_estimate, Executor, MonteCarloEstimate, StreamFamily, TimeGrid};

/// Stream cells: the averaged limit uses cell 0 and epsilon `i` uses `1 + i`.
pub const LIMIT_CELL: u32 = 0;
pub const AUX_CELL_BASE: u32 = 1 << 16;
pub const L2_CELL_BASE: u32 = 2 << 16;

/// One epsilon (or the limit, `epsilon = 0`) of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCell {
    pub epsilon: f64,
    pub n_paths: usize,
    /// One estimate per functional, in the order of the report's functionals.
    pub estimates: Vec<MonteCarloEstimate>,
    /// KS statistic against the limit at each functional's evaluation node.
    pub ks: Vec<f64>,
    pub wall_ms: u128,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub functionals: Vec<Functional>,
    /// Evaluation time of each functional.
    pub ks_times: Vec<f64>,
    pub cells: Vec<ConvergenceCell>,
    pub limit: ConvergenceCell,
    pub warnings: Vec<Warning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSettings {
    pub grid: TimeGrid,
    pub n_paths: usize,
    pub seed: u64,
    pub sim: SimOptions,
}

fn check_eps_list(eps: &[f64]) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::InvalidParameter("epsilon list is empty".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::InvalidParameter(format!("epsilon values {eps:?} must lie in (0, 1)")));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(format!("epsilon list {eps:?} must be strictly decreasing")));
    }
    Ok(())
}

/// Per-path outputs: functional values then the marginals read by each functional.
fn per_path(functionals: &[Functional], path: &[f64], d: usize) -> Result<Vec<f64>> {
    let first: Vec<f64> = path.iter().step_by(d).copied().collect();
    let n_steps = first.len() - 1;
    let mut out = Vec::with_capacity(2 * functionals.len());
    for f in functionals {
        out.push(f.eval(&first)?);
    }
    for f in functionals {
        out.push(first[f.node(n_steps)]);
    }
    Ok(out)
}

fn summarize(
    epsilon: f64,
    functionals: &[Functional],
    rows: &[Vec<f64>],
    reference: Option<&[Vec<f64>]>,
    wall_ms: u128,
) -> Result<(ConvergenceCell, Vec<Vec<f64>>)> {
    let m = functionals.len();
    let column = |j: usize| -> Vec<f64> { rows.iter().map(|r| r[j]).collect() };
    let estimates = (0..m).map(|j| mc_estimate(&column(j))).collect::<Result<Vec<_>>>()?;
    let marginals: Vec<Vec<f64>> = (0..m).map(|j| column(m + j)).collect();
    let ks = match reference {
        Some(refs) => marginals.iter().zip(refs).map(|(a, b)| ks_two_sample(a, b)).collect(),
        None => vec![0.0; m],
    };
    Ok((ConvergenceCell { epsilon, n_paths: rows.len(), estimates, ks, wall_ms }, marginals))
}

/// Estimates `E phi(X^eps)` for every epsilon and functional, and
/// `E phi(Xbar)` under the averaged model, with independent streams per
/// cell. KS statistics compare each cell's marginal with the limit's.
pub fn weak_convergence_report(
    system: &SlowFastSystem,
    model: &AveragedModel,
    eps_list: &[f64],
    functionals: &[Functional],
    settings: &ConvergenceSettings,
    exec: &Executor,
) -> Result<ConvergenceReport> {
    check_eps_list(eps_list)?;
    if functionals.is_empty() {
        return Err(Error::InvalidParameter("no functionals requested".into()));
    }
    if model.dim() != system.slow_dim() {
        return Err(Error::DimensionMismatch("averaged model and system slow dimensions differ".into()));
    }
    let d = system.slow_dim();
    let grid = settings.grid;
    let n = settings.n_paths;

    let start = Instant::now();
    let family = StreamFamily::new(settings.seed, LIMIT_CELL);
    let runs = exec.map(
        n,
        || AveragedSimulator::new(model, grid),
        |sim, p| {
            let path = sim.run(&system.x0, p, family.stream(p))?;
            Ok((per_path(functionals, path, d)?, sim.extrapolated))
        },
    )?;
    let mut warnings: Vec<Warning> = extrapolation_warning(runs.iter().map(|r| r.1)).into_iter().collect();
    let rows: Vec<Vec<f64>> = runs.into_iter().map(|r| r.0).collect();
    let (limit, reference) = summarize(0.0, functionals, &rows, None, start.elapsed().as_millis())?;

    let mut cells = Vec::with_capacity(eps_list.len());
    for (i, &eps) in eps_list.iter().enumerate() {
        let start = Instant::now();
        let family = StreamFamily::new(settings.seed, 1 + i as u32);
        let rows = map_paths(system, eps, &grid, &settings.sim, false, n, family, exec, |_, rec| {
            per_path(functionals, &rec.slow, d)
        })?;
        let (cell, _) = summarize(eps, functionals, &rows, Some(&reference), start.elapsed().as_millis())?;
        log::info!("epsilon {eps}: {:?}", cell.estimates.iter().map(|e| e.mean).collect::<Vec<_>>());
        cells.push(cell);
    }
    warnings.dedup();
    let ks_times = functionals.iter().map(|f| grid.node(f.node(grid.n_steps()))).collect();
    Ok(ConvergenceReport { functionals: functionals.to_vec(), ks_times, cells, limit, warnings })
}

impl ConvergenceReport {
    pub const CSV_HEADER: [&'static str; 8] =
        ["epsilon", "functional", "estimate", "std_error", "n_paths", "ks_stat", "ks_time", "wall_ms"];

    /// Writes one row per (epsilon, functional) followed by the limit rows
    /// (`epsilon = 0`). `wall_ms` is written as 0 unless `record_wall` is set,
    /// keeping the file reproducible.
    pub fn write_csv<W: Write>(&self, writer: W, record_wall: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::CSV_HEADER)?;
        for cell in self.cells.iter().chain(std::iter::once(&self.limit)) {
            let wall = if record_wall { cell.wall_ms } else { 0 };
            for (j, f) in self.functionals.iter().enumerate() {
                let e = &cell.estimates[j];
                w.write_record([
                    cell.epsilon.to_string(),
                    f.name.clone(),
                    e.mean.to_string(),
                    e.std_error.to_string(),
                    e.n_samples.to_string(),
                    cell.ks[j].to_string(),
                    self.ks_times[j].to_string(),
                    wall.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// `|E phi(X^eps) - E phi(Xbar)|` and its combined SE for functional `j`, per cell.
    pub fn gaps(&self, j: usize) -> Vec<(f64, f64)> {
        let lim = &self.limit.estimates[j];
        self.cells
            .iter()
            .map(|c| {
                let e = &c.estimates[j];
                ((e.mean - lim.mean).abs(), e.std_error.hypot(lim.std_error))
            })
            .collect()
    }
}

/// `E sup_t |X^eps_t - Xhat^eps_t|^2` over the noise-coupled pair.
pub fn auxiliary_gap(
    system: &SlowFastSystem,
    eps: f64,
    grid: &TimeGrid,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
    opts: &SimOptions,
) -> Result<MonteCarloEstimate> {
    let d = system.slow_dim();
    let sups = map_paths(system, eps, grid, opts, true, n_paths, streams, exec, |_, rec| {
        let sup = rec
            .slow
            .chunks_exact(d)
            .zip(rec.aux_slow.chunks_exact(d))
            .map(|(x, xh)| x.iter().zip(xh).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .fold(0.0, f64::max);
        Ok(sup)
    })?;
    mc_estimate(&sups)
}

/// `E|Y^eps_t|^2` at every grid node, accumulated without storing paths.
pub fn fast_second_moment(
    system: &SlowFastSystem,
    eps: f64,
    grid: &TimeGrid,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
    opts: &SimOptions,
) -> Result<Vec<f64>> {
    let l = system.fast_dim();
    PathSimulator::new(system, eps, *grid, opts, false)?;
    let sums = exec.sum(
        n_paths,
        grid.n_nodes(),
        || PathSimulator::new(system, eps, *grid, opts, false).expect("validated above"),
        |sim, p, out| {
            let rec = sim.run(p, streams.stream(p))?;
            for (k, y) in rec.fast.chunks_exact(l).enumerate() {
                out[k] = y.iter().map(|v| v * v).sum();
            }
            Ok(())
        },
    )?;
    Ok(sums.into_iter().map(|s| s / n_paths as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, Params};
    use crate::stochastic::ks_critical_1pct;

    fn settings(n: usize, seed: u64) -> ConvergenceSettings {
        ConvergenceSettings { grid: TimeGrid::with_step(0.0, 1.0, 0.01).unwrap(), n_paths: n, seed, sim: SimOptions::default() }
    }

    #[test]
    fn rejects_bad_epsilon_lists() {
        assert!(check_eps_list(&[0.2, 0.05]).is_ok());
        assert!(check_eps_list(&[0.05, 0.2]).is_err());
        assert!(check_eps_list(&[1.5]).is_err());
        assert!(check_eps_list(&[]).is_err());
    }

    #[test]
    fn y_independent_system_matches_limit_in_law() {
        let mut p = Params::new();
        p.insert("drift".into(), 0.3);
        p.insert("sigma".into(), 0.8);
        let sys = catalog::constant_system(&p).unwrap();
        let model = AveragedModel::constant(vec![0.3], vec![0.8]).unwrap();
        let fs = vec![Functional::by_name("tanh").unwrap(), Functional::by_name("cos@mid").unwrap()];
        let n = 4000;
        let report = weak_convergence_report(&sys, &model, &[0.5, 0.1], &fs, &settings(n, 9), &Executor::single()).unwrap();
        let crit = ks_critical_1pct(n, n);
        for cell in &report.cells {
            for (j, ks) in cell.ks.iter().enumerate() {
                assert!(*ks < crit, "eps {} functional {j}: {ks} >= {crit}", cell.epsilon);
            }
        }
        assert_eq!(report.ks_times, vec![1.0, 0.5]);
    }

    #[test]
    fn csv_layout_and_determinism() {
        let sys = catalog::ref_ou(&Params::new()).unwrap();
        let model = AveragedModel::constant(vec![0.0], vec![1.6]).unwrap();
        let fs = vec![Functional::by_name("cos").unwrap()];
        let run = |workers| {
            let r = weak_convergence_report(&sys, &model, &[0.2], &fs, &settings(300, 4), &Executor::new(workers).unwrap()).unwrap();
            let mut buf = Vec::new();
            r.write_csv(&mut buf, false).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = run(1);
        assert_eq!(a, run(3));
        let lines: Vec<&str> = a.lines().collect();
        assert_eq!(lines[0], "epsilon,functional,estimate,std_error,n_paths,ks_stat,ks_time,wall_ms");
        assert!(lines[1].starts_with("0.2,cos,"));
        assert!(lines[2].starts_with("0,cos,"));
        assert!(lines[2].ends_with(",0,1,0"));
    }

    #[test]
    fn zero_system_has_no_auxiliary_gap() {
        let sys = catalog::zero_system();
        let grid = TimeGrid::with_step(0.0, 1.0, 0.01).unwrap();
        let gap = auxiliary_gap(&sys, 0.1, &grid, 10, StreamFamily::new(0, 0), &Executor::single(), &SimOptions::default()).unwrap();
        assert_eq!(gap.mean, 0.0);
        assert_eq!(gap.std_error, 0.0);
    }

    #[test]
    fn auxiliary_gap_is_finite_for_ref_ou() {
        let sys = catalog::ref_ou(&Params::new()).unwrap();
        let grid = TimeGrid::with_step(0.0, 1.0, 1e-3).unwrap();
        let gap = auxiliary_gap(&sys, 0.05, &grid, 2000, StreamFamily::new(3, 0), &Executor::single(), &SimOptions::default()).unwrap();
        assert!(gap.mean.is_finite() && gap.mean > 0.0);
    }

    #[test]
    fn fast_second_moment_matches_bundle_profile() {
        let sys = catalog::ref_ou(&Params::new()).unwrap();
        let grid = TimeGrid::with_step(0.0, 1.0, 0.01).unwrap();
        let fam = StreamFamily::new(1, 1);
        let opts = SimOptions::default();
        let streamed = fast_second_moment(&sys, 0.2, &grid, 40, fam, &Executor::single(), &opts).unwrap();
        let bundle = crate::engine::simulate_slow_fast(&sys, 0.2, &grid, 40, fam, &Executor::single(), &opts).unwrap();
        let direct = crate::engine::fast_l2_profile(&bundle);
        for (a, b) in streamed.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12 * (1.0 + b));
        }
    }
}
