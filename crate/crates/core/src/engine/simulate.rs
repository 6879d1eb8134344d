use super::SlowFastSystem;
use crate::error::{Error, Result};
use crate::stochastic::{Component, Executor, IncrementGenerator, PathBundle, RngStream, StreamFamily, TimeGrid};

/// Fast micro-substeps per unit of `eps` (`h_fast <= eps / nu`).
pub const DEFAULT_SUBSTEPS_PER_EPS: f64 = 20.0;
/// A path is aborted once any state component exceeds this magnitude.
pub const DEFAULT_OVERFLOW_GUARD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// `nu`: the fast substep is at most `eps / nu`.
    pub substeps_per_eps: f64,
    /// Explicit number of substeps per grid step; must still honour `eps / nu`.
    pub fast_substeps: Option<usize>,
    pub overflow_guard: f64,
    /// Overrides the Khasminskii window length.
    pub window: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            substeps_per_eps: DEFAULT_SUBSTEPS_PER_EPS,
            fast_substeps: None,
            overflow_guard: DEFAULT_OVERFLOW_GUARD,
            window: None,
        }
    }
}

/// Number of integrator substeps per grid step of size `h`, so that the
/// substep `h / m` never exceeds `eps / nu`.
pub fn fast_substeps(h: f64, eps: f64, opts: &SimOptions) -> Result<usize> {
    if !(opts.substeps_per_eps > 0.0) {
        return Err(Error::InvalidParameter(format!("nu = {} must be positive", opts.substeps_per_eps)));
    }
    let limit = eps / opts.substeps_per_eps;
    match opts.fast_substeps {
        Some(0) => Err(Error::InvalidParameter("fast_substeps must be at least 1".into())),
        Some(m) => {
            let substep = h / m as f64;
            if substep > limit * (1.0 + 1e-12) {
                Err(Error::StepTooCoarse { substep, limit })
            } else {
                Ok(m)
            }
        }
        None => Ok(((h / limit) * (1.0 - 1e-12)).ceil().max(1.0) as usize),
    }
}

/// Khasminskii window length `eps (ln 1/eps)^(1/4)`.
pub fn khasminskii_delta(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::DegenerateEpsilon(eps));
    }
    Ok(eps * (1.0 / eps).ln().powf(0.25))
}

/// Hook called before every integrator substep with the current state and
/// the increments about to be applied.
pub trait SubstepObserver {
    #[allow(unused_variables)]
    fn substep(&mut self, t: f64, dt: f64, x: &[f64], y: &[f64], dw: &[f64], dz: &[f64]) {}
}

impl SubstepObserver for () {}

/// One path on the recording grid, each array laid out `[node][component]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PathRecord {
    pub slow: Vec<f64>,
    pub fast: Vec<f64>,
    pub aux_slow: Vec<f64>,
    pub aux_fast: Vec<f64>,
}

struct Scratch {
    b: Vec<f64>,
    sigma: Vec<f64>,
    fast_b: Vec<f64>,
    fast_c: Vec<f64>,
    pert: Vec<f64>,
}

impl Scratch {
    fn new(d: usize, l: usize) -> Self {
        Self { b: vec![0.0; d], sigma: vec![0.0; d * d], fast_b: vec![0.0; l], fast_c: vec![0.0; l * l], pert: vec![0.0; l] }
    }
}

/// Euler-Maruyama integrator for a single path, reusable across paths.
///
/// Each grid step is split into `m` equal substeps (see [`fast_substeps`]);
/// both components advance on every substep and the state is recorded at
/// grid nodes. With `auxiliary` set, the Khasminskii process `(X^, Y^)` is
/// co-simulated from the same increments: on each window `[K D, (K+1) D)`
/// its coefficients are frozen at time `K D` and at the true slow state at
/// the window start, and `Y^` is re-anchored to the true `Y` there. Window
/// starts are snapped to the first substep node at or after `K D`.
pub struct PathSimulator<'a> {
    system: &'a SlowFastSystem,
    grid: TimeGrid,
    substeps: usize,
    guard: f64,
    window: Option<f64>,
    drift_scale: f64,
    noise_scale: f64,
    pert_scale: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    xh: Vec<f64>,
    yh: Vec<f64>,
    frozen_x: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
    dw: Vec<f64>,
    dz: Vec<f64>,
    dwt: Vec<f64>,
    scratch: Scratch,
    record: PathRecord,
}

impl<'a> PathSimulator<'a> {
    pub fn new(system: &'a SlowFastSystem, eps: f64, grid: TimeGrid, opts: &SimOptions, auxiliary: bool) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {eps} must lie in (0, 1]")));
        }
        let substeps = fast_substeps(grid.step(), eps, opts)?;
        let window = if auxiliary {
            let delta = match opts.window {
                Some(w) if w > 0.0 => w,
                Some(w) => return Err(Error::InvalidParameter(format!("window length {w} must be positive"))),
                None => khasminskii_delta(eps)?,
            };
            Some(delta)
        } else {
            None
        };
        let (d, l) = (system.slow_dim(), system.fast_dim());
        let n = grid.n_nodes();
        let pert_scale = system.perturbation.as_ref().map_or(0.0, |p| eps.powf(-p.exponent));
        Ok(Self {
            system,
            grid,
            substeps,
            guard: opts.overflow_guard,
            window,
            drift_scale: 1.0 / eps,
            noise_scale: 1.0 / eps.sqrt(),
            pert_scale,
            x: vec![0.0; d],
            y: vec![0.0; l],
            xh: vec![0.0; d],
            yh: vec![0.0; l],
            frozen_x: vec![0.0; d],
            dx: vec![0.0; d],
            dy: vec![0.0; l],
            dw: vec![0.0; d],
            dz: vec![0.0; l],
            dwt: vec![0.0; l],
            scratch: Scratch::new(d, l),
            record: PathRecord {
                slow: vec![0.0; n * d],
                fast: vec![0.0; n * l],
                aux_slow: if auxiliary { vec![0.0; n * d] } else { Vec::new() },
                aux_fast: if auxiliary { vec![0.0; n * l] } else { Vec::new() },
            },
        })
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    pub fn window(&self) -> Option<f64> {
        self.window
    }

    pub fn record(&self) -> &PathRecord {
        &self.record
    }

    pub fn run(&mut self, path: usize, stream: RngStream) -> Result<&PathRecord> {
        self.run_observed(path, stream, &mut ())
    }

    pub fn run_observed<O: SubstepObserver>(&mut self, path: usize, stream: RngStream, obs: &mut O) -> Result<&PathRecord> {
        let sys = self.system;
        let (d, l) = (sys.slow_dim(), sys.fast_dim());
        let mut gen = IncrementGenerator::new(&sys.correlation, stream);
        self.x.copy_from_slice(&sys.x0);
        self.y.copy_from_slice(&sys.y0);
        self.record.slow[..d].copy_from_slice(&self.x);
        self.record.fast[..l].copy_from_slice(&self.y);
        let aux = self.window.is_some();
        let delta = self.window.unwrap_or(f64::INFINITY);
        let t0 = self.grid.t0();
        let mut frozen_t = t0;
        let mut window_index = 0u64;
        if aux {
            self.xh.copy_from_slice(&sys.x0);
            self.yh.copy_from_slice(&sys.y0);
            self.frozen_x.copy_from_slice(&sys.x0);
            self.record.aux_slow[..d].copy_from_slice(&self.xh);
            self.record.aux_fast[..l].copy_from_slice(&self.yh);
        }
        let dt = self.grid.step() / self.substeps as f64;
        for k in 0..self.grid.n_steps() {
            let tk = self.grid.node(k);
            for j in 0..self.substeps {
                let t = tk + dt * j as f64;
                if aux {
                    let mut next = t0 + delta * (window_index + 1) as f64;
                    if t >= next - 1e-9 * dt {
                        while t >= next - 1e-9 * dt {
                            window_index += 1;
                            next = t0 + delta * (window_index + 1) as f64;
                        }
                        frozen_t = t0 + delta * window_index as f64;
                        self.frozen_x.copy_from_slice(&self.x);
                        self.yh.copy_from_slice(&self.y);
                    }
                }
                gen.next(dt, &mut self.dw, &mut self.dz, &mut self.dwt);
                obs.substep(t, dt, &self.x, &self.y, &self.dw, &self.dz);
                if aux {
                    self.increment(frozen_t, true, dt);
                    add(&mut self.xh, &self.dx);
                    add(&mut self.yh, &self.dy);
                }
                self.increment(t, false, dt);
                add(&mut self.x, &self.dx);
                add(&mut self.y, &self.dy);
                let blown = |v: &[f64], g: f64| v.iter().any(|a| !(a.abs() <= g));
                if blown(&self.x, self.guard)
                    || blown(&self.y, self.guard)
                    || (aux && (blown(&self.xh, self.guard) || blown(&self.yh, self.guard)))
                {
                    return Err(Error::NumericalBlowup { path, time: t + dt });
                }
            }
            let node = k + 1;
            self.record.slow[node * d..(node + 1) * d].copy_from_slice(&self.x);
            self.record.fast[node * l..(node + 1) * l].copy_from_slice(&self.y);
            if aux {
                self.record.aux_slow[node * d..(node + 1) * d].copy_from_slice(&self.xh);
                self.record.aux_fast[node * l..(node + 1) * l].copy_from_slice(&self.yh);
            }
        }
        Ok(&self.record)
    }

    /// Euler increments `(dx, dy)` for the current drivers. The true pair
    /// evaluates coefficients at `(t, x, y)`; the auxiliary pair at
    /// `(frozen_t, frozen_x, y^)`.
    #[inline]
    fn increment(&mut self, t: f64, auxiliary: bool, dt: f64) {
        let sys = self.system;
        let (d, l) = (sys.slow_dim(), sys.fast_dim());
        let (xc, yc) = if auxiliary { (&self.frozen_x, &self.yh) } else { (&self.x, &self.y) };
        let s = &mut self.scratch;
        sys.slow_drift.eval(t, xc, yc, &mut s.b);
        sys.slow_diffusion.eval(t, xc, yc, &mut s.sigma);
        sys.fast_drift.eval(t, xc, yc, &mut s.fast_b);
        sys.fast_diffusion.eval(t, xc, yc, &mut s.fast_c);
        if let Some(p) = &sys.perturbation {
            p.field.eval(t, xc, yc, &mut s.pert);
        }
        for i in 0..d {
            let mut acc = s.b[i] * dt;
            for j in 0..d {
                acc += s.sigma[i * d + j] * self.dw[j];
            }
            self.dx[i] = acc;
        }
        let has_pert = sys.perturbation.is_some();
        for i in 0..l {
            let mut drift = s.fast_b[i] * self.drift_scale;
            if has_pert {
                drift += s.pert[i] * self.pert_scale;
            }
            let mut noise = 0.0;
            for j in 0..l {
                noise += s.fast_c[i * l + j] * self.dwt[j];
            }
            self.dy[i] = drift * dt + self.noise_scale * noise;
        }
    }
}

#[inline]
fn add(state: &mut [f64], inc: &[f64]) {
    state.iter_mut().zip(inc).for_each(|(s, v)| *s += v);
}

/// Runs `f` on every simulated path, returning results in path order.
#[allow(clippy::too_many_arguments)]
pub(crate) fn map_paths<T, F>(
    system: &SlowFastSystem,
    eps: f64,
    grid: &TimeGrid,
    opts: &SimOptions,
    auxiliary: bool,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &PathRecord) -> Result<T> + Sync + Send,
{
    map_paths_observed(system, eps, grid, opts, auxiliary, n_paths, streams, exec, |_| (), |p, rec, _| f(p, rec))
}

/// As [`map_paths`], with a fresh observer per path handed to `f` afterwards.
#[allow(clippy::too_many_arguments)]
pub(crate) fn map_paths_observed<T, O, M, F>(
    system: &SlowFastSystem,
    eps: f64,
    grid: &TimeGrid,
    opts: &SimOptions,
    auxiliary: bool,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
    make_observer: M,
    f: F,
) -> Result<Vec<T>>
where
    T: Send,
    O: SubstepObserver,
    M: Fn(usize) -> O + Sync + Send,
    F: Fn(usize, &PathRecord, O) -> Result<T> + Sync + Send,
{
    // Fail early on configuration errors rather than once per worker.
    PathSimulator::new(system, eps, *grid, opts, auxiliary)?;
    exec.map(
        n_paths,
        || PathSimulator::new(system, eps, *grid, opts, auxiliary).expect("validated above"),
        |sim, p| {
            let mut obs = make_observer(p);
            let rec = sim.run_observed(p, streams.stream(p), &mut obs)?;
            f(p, rec, obs)
        },
    )
}

fn interleave(record: &PathRecord, d: usize, l: usize, aux: bool, n_nodes: usize) -> Vec<f64> {
    let width = if aux { 2 * (d + l) } else { d + l };
    let mut out = Vec::with_capacity(width * n_nodes);
    for k in 0..n_nodes {
        out.extend_from_slice(&record.slow[k * d..(k + 1) * d]);
        out.extend_from_slice(&record.fast[k * l..(k + 1) * l]);
        if aux {
            out.extend_from_slice(&record.aux_slow[k * d..(k + 1) * d]);
            out.extend_from_slice(&record.aux_fast[k * l..(k + 1) * l]);
        }
    }
    out
}

fn components(d: usize, l: usize, aux: bool) -> Vec<Component> {
    let mut c: Vec<Component> = (0..d).map(Component::Slow).chain((0..l).map(Component::Fast)).collect();
    if aux {
        c.extend((0..d).map(Component::AuxSlow));
        c.extend((0..l).map(Component::AuxFast));
    }
    c
}

#[allow(clippy::too_many_arguments)]
fn simulate_bundle(
    system: &SlowFastSystem,
    eps: f64,
    grid: &TimeGrid,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
    opts: &SimOptions,
    aux: bool,
) -> Result<PathBundle> {
    let (d, l) = (system.slow_dim(), system.fast_dim());
    let n_nodes = grid.n_nodes();
    let paths = map_paths(system, eps, grid, opts, aux, n_paths, streams, exec, |_, rec| {
        Ok(interleave(rec, d, l, aux, n_nodes))
    })?;
    let stream_ids = (0..n_paths).map(|p| streams.stream(p)).collect();
    Ok(PathBundle::new(*grid, components(d, l, aux), paths.concat(), stream_ids))
}

/// Euler-Maruyama paths of `(X^eps, Y^eps)` recorded on `grid`.
pub fn simulate_slow_fast(
    system: &SlowFastSystem,
    eps: f64,
    grid: &TimeGrid,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
    opts: &SimOptions,
) -> Result<PathBundle> {
    simulate_bundle(system, eps, grid, n_paths, streams, exec, opts, false)
}

/// Co-simulates the true pair and the Khasminskii auxiliary pair from the
/// same increments; components are `X, Y, Xhat, Yhat`.
pub fn simulate_auxiliary(
    system: &SlowFastSystem,
    eps: f64,
    grid: &TimeGrid,
    n_paths: usize,
    streams: StreamFamily,
    exec: &Executor,
    opts: &SimOptions,
) -> Result<PathBundle> {
    simulate_bundle(system, eps, grid, n_paths, streams, exec, opts, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::engine::{CoefficientField, Shape};
    use crate::stochastic::{ks_two_sample, CorrelationSpec};

    #[test]
    fn delta_values() {
        let e1 = (-1.0f64).exp();
        assert!((khasminskii_delta(e1).unwrap() - e1).abs() < 1e-15);
        let e16 = (-16.0f64).exp();
        assert!((khasminskii_delta(e16).unwrap() - 2.0 * e16).abs() < 1e-20);
        // (ln 100)^(1/4) = 1.4649116...
        assert!((khasminskii_delta(0.01).unwrap() - 0.014649116).abs() < 5e-9);
        assert_eq!(khasminskii_delta(1.0), Err(Error::DegenerateEpsilon(1.0)));
        assert_eq!(khasminskii_delta(0.0), Err(Error::DegenerateEpsilon(0.0)));
    }

    #[test]
    fn delta_ratio_behaviour() {
        let mut prev = f64::INFINITY;
        for k in 1..12 {
            let eps = 10f64.powi(-k);
            let delta = khasminskii_delta(eps).unwrap();
            assert!(delta < prev && delta / eps > 1.0);
            prev = delta;
        }
    }

    #[test]
    fn substep_policy() {
        let opts = SimOptions::default();
        assert_eq!(fast_substeps(1e-3, 0.2, &opts).unwrap(), 1);
        assert_eq!(fast_substeps(1e-3, 0.0125, &opts).unwrap(), 2);
        assert_eq!(fast_substeps(1e-3, 0.02, &opts).unwrap(), 1);
        let forced = SimOptions { fast_substeps: Some(1), ..opts };
        assert!(matches!(fast_substeps(1e-2, 0.05, &forced), Err(Error::StepTooCoarse { .. })));
        let ok = SimOptions { fast_substeps: Some(4), ..opts };
        assert_eq!(fast_substeps(1e-2, 0.05, &ok).unwrap(), 4);
    }

    #[test]
    fn zero_dynamics_stay_put() {
        let mut system = catalog::zero_system();
        system.x0 = vec![0.7];
        system.y0 = vec![-0.3];
        let grid = TimeGrid::with_step(0.0, 1.0, 0.01).unwrap();
        let exec = Executor::single();
        let bundle = simulate_auxiliary(&system, 0.1, &grid, 8, StreamFamily::new(1, 0), &exec, &SimOptions::default()).unwrap();
        for p in 0..8 {
            for k in 0..grid.n_nodes() {
                assert_eq!(bundle.value(p, k, 0), 0.7);
                assert_eq!(bundle.value(p, k, 1), -0.3);
                assert_eq!(bundle.value(p, k, 2), 0.7);
                assert_eq!(bundle.value(p, k, 3), -0.3);
            }
        }
    }

    #[test]
    fn auxiliary_shares_noise_with_true_path() {
        let system = catalog::ref_ou(&Default::default()).unwrap();
        let grid = TimeGrid::with_step(0.0, 1.0, 0.01).unwrap();
        let exec = Executor::single();
        let fam = StreamFamily::new(99, 1);
        let opts = SimOptions::default();
        let plain = simulate_slow_fast(&system, 0.05, &grid, 16, fam, &exec, &opts).unwrap();
        let aux = simulate_auxiliary(&system, 0.05, &grid, 16, fam, &exec, &opts).unwrap();
        for p in 0..16 {
            for k in 0..grid.n_nodes() {
                assert_eq!(plain.value(p, k, 0).to_bits(), aux.value(p, k, 0).to_bits());
                assert_eq!(plain.value(p, k, 1).to_bits(), aux.value(p, k, 1).to_bits());
            }
        }
        // B and C do not depend on (t, x), so the re-anchored fast copy is exact.
        for k in 0..grid.n_nodes() {
            assert_eq!(aux.value(3, k, 1).to_bits(), aux.value(3, k, 3).to_bits());
        }
    }

    #[test]
    fn absent_perturbation_ignores_exponent() {
        let system = catalog::ref_ou(&Default::default()).unwrap();
        let zero_d = CoefficientField::zero("D", 1, 1, Shape::Vector(1));
        let perturbed = system.clone().with_perturbation(zero_d, 0.5).unwrap();
        let grid = TimeGrid::with_step(0.0, 0.5, 0.01).unwrap();
        let exec = Executor::single();
        let fam = StreamFamily::new(5, 0);
        let opts = SimOptions::default();
        let a = simulate_slow_fast(&system, 0.1, &grid, 4, fam, &exec, &opts).unwrap();
        let b = simulate_slow_fast(&perturbed, 0.1, &grid, 4, fam, &exec, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blowup_is_reported() {
        let mut system = catalog::zero_system();
        system.fast_drift = CoefficientField::scalar("expansive", |_, _, y| 50.0 * y);
        system.y0 = vec![1.0];
        let grid = TimeGrid::with_step(0.0, 1.0, 0.01).unwrap();
        let err = simulate_slow_fast(&system, 0.5, &grid, 2, StreamFamily::new(1, 0), &Executor::single(), &SimOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::NumericalBlowup { path: 0, .. }));
    }

    #[test]
    fn bundle_is_deterministic_across_workers() {
        let system = catalog::ref_ou(&Default::default()).unwrap();
        let grid = TimeGrid::with_step(0.0, 1.0, 0.02).unwrap();
        let fam = StreamFamily::new(3, 2);
        let opts = SimOptions::default();
        let a = simulate_slow_fast(&system, 0.1, &grid, 64, fam, &Executor::new(1).unwrap(), &opts).unwrap();
        let b = simulate_slow_fast(&system, 0.1, &grid, 64, fam, &Executor::new(3).unwrap(), &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.all_finite());
    }

    #[test]
    fn fast_component_at_unit_eps_matches_single_scale_law() {
        // eps = 1, time-independent OU fast pair: Y solves dY = -2Y dt + dW~.
        let system = catalog::ref_ou(&Default::default()).unwrap();
        let grid = TimeGrid::with_step(0.0, 1.0, 0.01).unwrap();
        let n = 10_000;
        let bundle =
            simulate_slow_fast(&system, 1.0, &grid, n, StreamFamily::new(17, 0), &Executor::single(), &SimOptions::default())
                .unwrap();
        let last = grid.n_steps();
        let multi: Vec<f64> = (0..n).map(|p| bundle.value(p, last, 1)).collect();
        // Direct single-scale Euler on independent draws.
        let mut src = crate::stochastic::RngStream::new(18, 0).source();
        let h = grid.step();
        let direct: Vec<f64> = (0..n)
            .map(|_| {
                let mut y = 0.0;
                for _ in 0..grid.n_steps() {
                    y += -2.0 * y * h + h.sqrt() * src.next_normal();
                }
                y
            })
            .collect();
        let d = ks_two_sample(&multi, &direct);
        assert!(d < 1.63 / (n as f64).sqrt(), "KS = {d}");
    }

    #[test]
    fn stationary_fast_variance() {
        // REF-OU at eps = 0.05: Var(Y) ~ 1/(2 kappa) = 0.25 once t >> eps.
        let system = catalog::ref_ou(&Default::default()).unwrap();
        let grid = TimeGrid::with_step(0.0, 1.0, 1e-3).unwrap();
        let n = 20_000;
        let half = grid.nearest_node(0.5);
        let nodes = grid.n_nodes() - half;
        let sums = Executor::single()
            .sum(n, 2 * nodes, || PathSimulator::new(&system, 0.05, grid, &SimOptions::default(), false).unwrap(), |sim, p, out| {
                let rec = sim.run(p, StreamFamily::new(21, 0).stream(p))?;
                for (i, k) in (half..grid.n_nodes()).enumerate() {
                    let y = rec.fast[k];
                    out[i] = y;
                    out[nodes + i] = y * y;
                }
                Ok(())
            })
            .unwrap();
        let n = n as f64;
        let avg_var = (0..nodes).map(|i| sums[nodes + i] / n - (sums[i] / n).powi(2)).sum::<f64>() / nodes as f64;
        assert!((avg_var / 0.25 - 1.0).abs() < 0.05, "variance {avg_var}");
    }

    #[test]
    fn rejects_bad_epsilon_and_window() {
        let system = catalog::zero_system();
        let grid = TimeGrid::with_step(0.0, 1.0, 0.1).unwrap();
        assert!(PathSimulator::new(&system, 0.0, grid, &SimOptions::default(), false).is_err());
        assert!(PathSimulator::new(&system, 1.5, grid, &SimOptions::default(), false).is_err());
        // eps = 1 has no Khasminskii window unless overridden.
        assert!(PathSimulator::new(&system, 1.0, grid, &SimOptions::default(), true).is_err());
        let opts = SimOptions { window: Some(0.3), ..Default::default() };
        assert!(PathSimulator::new(&system, 1.0, grid, &opts, true).is_ok());
        let _ = CorrelationSpec::independent(1, 1);
    }
}
