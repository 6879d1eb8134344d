use crate::ergodic::AveragedModel;
use crate::error::{Error, Result, Warning};
use crate::stochastic::{Component, Executor, GaussianSource, PathBundle, RngStream, StreamFamily, TimeGrid};
use crate::engine::DEFAULT_OVERFLOW_GUARD;

/// Euler-Maruyama integrator of the averaged equation for one path at a time.
pub struct AveragedSimulator<'a> {
    model: &'a AveragedModel,
    grid: TimeGrid,
    drift: Vec<f64>,
    sigma: Vec<f64>,
    dw: Vec<f64>,
    x: Vec<f64>,
    /// Node values `[node][component]` of the last path.
    pub path: Vec<f64>,
    /// Clamped model queries on the last path.
    pub extrapolated: u64,
}

impl<'a> AveragedSimulator<'a> {
    pub fn new(model: &'a AveragedModel, grid: TimeGrid) -> Self {
        let d = model.dim();
        Self {
            model,
            grid,
            drift: vec![0.0; d],
            sigma: vec![0.0; d * d],
            dw: vec![0.0; d],
            x: vec![0.0; d],
            path: vec![0.0; grid.n_nodes() * d],
            extrapolated: 0,
        }
    }

    pub fn run(&mut self, x0: &[f64], path: usize, stream: RngStream) -> Result<&[f64]> {
        let mut source = stream.source();
        self.run_with(x0, path, &mut source)
    }

    pub(crate) fn run_with(&mut self, x0: &[f64], path: usize, source: &mut GaussianSource) -> Result<&[f64]> {
        let d = self.model.dim();
        if x0.len() != d {
            return Err(Error::DimensionMismatch(format!("x0 has {} entries, model dimension is {d}", x0.len())));
        }
        let h = self.grid.step();
        let sq = h.sqrt();
        self.x.copy_from_slice(x0);
        self.path[..d].copy_from_slice(x0);
        self.extrapolated = 0;
        for k in 0..self.grid.n_steps() {
            let t = self.grid.node(k);
            if self.model.eval(t, &self.x, &mut self.drift, &mut self.sigma) {
                self.extrapolated += 1;
            }
            source.fill(&mut self.dw);
            for i in 0..d {
                let mut inc = self.drift[i] * h;
                for j in 0..d {
                    inc += self.sigma[i * d + j] * self.dw[j] * sq;
                }
                self.x[i] += inc;
            }
            if self.x.iter().any(|v| !(v.abs() <= DEFAULT_OVERFLOW_GUARD)) {
                return Err(Error::NumericalBlowup { path, time: self.grid.node(k + 1) });
            }
            self.path[(k + 1) * d..(k + 2) * d].copy_from_slice(&self.x);
        }
        Ok(&self.path)
    }
}

/// Paths of the averaged equation together with extrapolation counts.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedPaths {
    pub bundle: PathBundle,
    pub warning: Option<Warning>,
}

pub(crate) fn extrapolation_warning(per_path: impl Iterator<Item = u64>) -> Option<Warning> {
    let (mut paths, mut queries) = (0usize, 0u64);
    for q in per_path {
        if q > 0 {
            paths += 1;
            queries += q;
        }
    }
    (paths > 0).then(|| {
        let w = Warning::Extrapolation { paths, queries };
        log::warn!("{w}");
        w
    })
}

/// Euler-Maruyama paths of `dX = bbar dt + sigmabar dW` from `x0`.
pub fn simulate_averaged(
    model: &AveragedModel,
    x0: &[f64],
    grid: &TimeGrid,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
) -> Result<AveragedPaths> {
    let runs = exec.map(
        n_paths,
        || AveragedSimulator::new(model, *grid),
        |sim, p| {
            sim.run(x0, p, streams.stream(p))?;
            Ok((sim.path.clone(), sim.extrapolated))
        },
    )?;
    let warning = extrapolation_warning(runs.iter().map(|r| r.1));
    let values = runs.into_iter().flat_map(|r| r.0).collect();
    let ids = (0..n_paths).map(|p| streams.stream(p)).collect();
    let bundle = PathBundle::new(*grid, (0..model.dim()).map(Component::Slow).collect(), values, ids);
    Ok(AveragedPaths { bundle, warning })
}
