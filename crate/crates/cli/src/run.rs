//! Subcommand dispatch, artifact writing and run manifests.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use slowfast::catalog;
use slowfast::engine::{
    check_constants, check_dissipativity, check_moment_bounds, simulate_slow_fast, BoxSampler, SimOptions,
    SlowFastSystem,
};
use slowfast::ergodic::{
    estimate_averaged_diffusion, estimate_averaged_drift, estimate_invariant, psd_sqrt, tabulate_averaged_model,
    verify_contraction, AveragedModel, ErgodicParams, FrozenEquation, QUANTILE_LEVELS,
};
use slowfast::finance::{
    averaged_local_vol, discounted_payoffs, girsanov_weight, price_convergence_experiment, risk_neutralize,
    CustomPayoff, LocalVolModel, LsvModel, MeasureChange, OptionKind, OptionSpec, PricingModel, PricingSettings,
    WeightFn,
};
use slowfast::lab::{
    auxiliary_gap, fast_second_moment, weak_convergence_report, ConvergenceSettings, Functional, AUX_CELL_BASE,
    L2_CELL_BASE,
};
use slowfast::stochastic::{mc_estimate, Executor, StreamFamily, TimeGrid};

use crate::config::{ConfigErrors, ExperimentConfig, LSV_MODELS};

/// Stream cells owned by the runner; the sweeps themselves use cells below
/// `AUX_CELL_BASE` and the auxiliary/fast-moment ranges above it.
pub const TABULATE_CELL: u32 = 3 << 16;
pub const FROZEN_CELL: u32 = 4 << 16;
pub const VERIFY_CELL: u32 = 5 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Subcommand {
    Frozen,
    Average,
    Converge,
    Price,
    Verify,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Frozen => "frozen",
            Self::Average => "average",
            Self::Converge => "converge",
            Self::Price => "price",
            Self::Verify => "verify",
        }
    }
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitStatus {
    Success,
    CheckFailure,
    ConfigError,
    NumericalFailure,
}

impl ExitStatus {
    pub fn code(&self) -> i32 {
        match self {
            Self::Success => 0,
            Self::CheckFailure => 1,
            Self::ConfigError => 2,
            Self::NumericalFailure => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub threshold: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Numerical(slowfast::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<slowfast::Error> for RunError {
    fn from(e: slowfast::Error) -> Self {
        use slowfast::Error as E;
        match e {
            E::NumericalBlowup { .. }
            | E::NonFiniteSample { .. }
            | E::NodeFailure { .. }
            | E::DissipativityViolated { .. }
            | E::NotPsd(_)
            | E::NotSymmetric(_)
            | E::DegenerateVolatility { .. }
            | E::UnboundedFunctional { .. }
            | E::StepTooCoarse { .. }
            | E::InsufficientSamples(_)
            | E::Io(_)
            | E::Table(_) => RunError::Numerical(e),
            other => RunError::Config(ConfigErrors::single("<run>", other.to_string())),
        }
    }
}

impl RunError {
    pub fn status(&self) -> ExitStatus {
        match self {
            Self::Config(_) => ExitStatus::ConfigError,
            Self::Numerical(_) | Self::Io(_) => ExitStatus::NumericalFailure,
        }
    }

    fn failures(&self) -> Vec<Failure> {
        match self {
            Self::Config(errs) => errs
                .0
                .iter()
                .map(|e| Failure { kind: "config".into(), field: Some(e.field.clone()), message: e.message.clone() })
                .collect(),
            Self::Numerical(e) => vec![Failure { kind: "numerical".into(), field: None, message: e.to_string() }],
            Self::Io(e) => vec![Failure { kind: "io".into(), field: None, message: e.to_string() }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

/// Metadata of one run; numeric results live in the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub subcommand: Subcommand,
    pub status: ExitStatus,
    pub exit_code: i32,
    pub model: String,
    pub seed: u64,
    pub workers: usize,
    pub config_hash: String,
    pub versions: BTreeMap<String, String>,
    pub wall_ms: u128,
    pub outputs: Vec<String>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub failures: Vec<Failure>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: ExitStatus,
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub error: Option<RunError>,
}

#[derive(Default)]
struct Context {
    outputs: Vec<String>,
    checks: Vec<Check>,
    warnings: Vec<String>,
}

impl Context {
    fn check(&mut self, name: impl Into<String>, statistic: f64, threshold: Option<f64>, passed: bool) {
        let name = name.into();
        log::info!("check {name}: {} ({statistic})", if passed { "pass" } else { "FAIL" });
        self.checks.push(Check { name, statistic, threshold, passed });
    }

    fn create(&mut self, dir: &Path, name: &str) -> std::io::Result<BufWriter<File>> {
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(File::create(dir.join(name))?))
    }
}

/// Runs `sub` under `cfg`, writing its CSV artifacts, the effective config
/// echo and `<sub>.manifest.json` into the output directory.
pub fn run_experiment(cfg: &ExperimentConfig, sub: Subcommand) -> Result<RunOutcome, RunError> {
    let start = Instant::now();
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("effective_config.toml"), cfg.to_toml())?;
    let exec = Executor::new(cfg.mc.workers)?;
    log::info!("{} on `{}` with {} worker(s), seed {}", sub.name(), cfg.model.name, exec.workers(), cfg.mc.seed);

    let mut ctx = Context { outputs: vec!["effective_config.toml".into()], ..Context::default() };
    let result = match sub {
        Subcommand::Frozen => frozen(cfg, &exec, &mut ctx),
        Subcommand::Average => average(cfg, &exec, &mut ctx),
        Subcommand::Converge => converge(cfg, &exec, &mut ctx),
        Subcommand::Price => price(cfg, &exec, &mut ctx),
        Subcommand::Verify => verify(cfg, &exec, &mut ctx),
    };
    let (status, error) = match result {
        Ok(()) if ctx.checks.iter().all(|c| c.passed) => (ExitStatus::Success, None),
        Ok(()) => (ExitStatus::CheckFailure, None),
        Err(e) => (e.status(), Some(e)),
    };
    let mut failures: Vec<Failure> = ctx
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| Failure {
            kind: "check".into(),
            field: Some(c.name.clone()),
            message: format!("statistic {} against threshold {:?}", c.statistic, c.threshold),
        })
        .collect();
    if let Some(e) = &error {
        failures.extend(e.failures());
    }
    let manifest_name = format!("{}.manifest.json", sub.name());
    let manifest = Manifest {
        subcommand: sub,
        status,
        exit_code: status.code(),
        model: cfg.model.name.clone(),
        seed: cfg.mc.seed,
        workers: exec.workers(),
        config_hash: cfg.hash(),
        versions: BTreeMap::from([
            ("slowfast-cli".to_string(), env!("CARGO_PKG_VERSION").to_string()),
            ("slowfast-core".to_string(), slowfast::VERSION.to_string()),
        ]),
        wall_ms: start.elapsed().as_millis(),
        outputs: ctx.outputs,
        checks: ctx.checks,
        warnings: ctx.warnings,
        failures,
    };
    let manifest_path = dir.join(manifest_name);
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n")?;
    Ok(RunOutcome { status, manifest, manifest_path, error })
}

fn system(cfg: &ExperimentConfig) -> Result<SlowFastSystem, RunError> {
    Ok(catalog::system(&cfg.model.name, &cfg.params())?)
}

fn lsv(cfg: &ExperimentConfig) -> Result<(LsvModel, MeasureChange), RunError> {
    match cfg.model.name.as_str() {
        "lsv-tanh" => Ok(catalog::lsv_tanh(&cfg.params())?),
        other => Err(ConfigErrors::single(
            "model.name",
            format!("`{other}` is not an LSV model; use one of: {}", LSV_MODELS.join(", ")),
        )
        .into()),
    }
}

fn ergodic_params(cfg: &ExperimentConfig) -> ErgodicParams {
    ErgodicParams {
        burn_in: Some(cfg.ergodic.burn_in),
        horizon: Some(cfg.ergodic.horizon),
        step: cfg.ergodic.step,
        n_batches: cfg.ergodic.n_batches,
        ..ErgodicParams::default()
    }
}

fn sim_options(cfg: &ExperimentConfig) -> SimOptions {
    SimOptions { substeps_per_eps: cfg.grid.nu, ..SimOptions::default() }
}

fn grid(cfg: &ExperimentConfig) -> Result<TimeGrid, RunError> {
    Ok(TimeGrid::with_step(0.0, cfg.grid.horizon, cfg.grid.h)?)
}

fn csv_writer<W: std::io::Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

fn finish_csv<W: std::io::Write>(mut w: csv::Writer<W>) -> Result<(), RunError> {
    w.flush()?;
    Ok(())
}

/// `gaps[i+1] <= gaps[i] + hypot(se[i], se[i+1])` for all `i`; returns the
/// largest excess over the slack (non-positive when the check holds).
pub fn monotone_excess(gaps: &[(f64, f64)]) -> f64 {
    gaps.windows(2).map(|w| w[1].0 - w[0].0 - w[0].1.hypot(w[1].1)).fold(f64::NEG_INFINITY, f64::max)
}

fn stationarity_check(ctx: &mut Context, name: &str, warnings: &[slowfast::Warning]) {
    for w in warnings {
        ctx.warnings.push(format!("{name}: {w}"));
    }
    ctx.check(format!("{name}.stationary"), warnings.len() as f64, Some(0.0), warnings.is_empty());
}

fn contraction_check(
    cfg: &ExperimentConfig,
    frozen: &FrozenEquation,
    y0: &[f64],
    exec: &Executor,
    cell: u32,
    ctx: &mut Context,
) -> Result<Option<slowfast::ergodic::ContractionReport>, RunError> {
    if frozen.beta().is_none() {
        ctx.warnings.push("fast drift declares no dissipativity constant; contraction not checked".into());
        return Ok(None);
    }
    let y1: Vec<f64> = y0.iter().map(|v| v + 1.0).collect();
    let y2: Vec<f64> = y0.iter().map(|v| v - 1.0).collect();
    let report = verify_contraction(
        frozen,
        &y1,
        &y2,
        &[0.25, 0.5, 1.0],
        cfg.ergodic.step,
        0.01,
        cfg.mc.n_paths.min(1000),
        StreamFamily::new(cfg.mc.seed, cell),
        exec,
    )?;
    let worst = report.rows.iter().map(|r| r.distance.mean / r.bound).fold(0.0, f64::max);
    ctx.check("contraction", worst, Some(1.0 + report.margin), report.passed());
    Ok(Some(report))
}

fn frozen(cfg: &ExperimentConfig, exec: &Executor, ctx: &mut Context) -> Result<(), RunError> {
    let system = system(cfg)?;
    let (d, l) = (system.slow_dim(), system.fast_dim());
    let frozen = FrozenEquation::of_system(&system, 0.0, &system.x0)?;
    let params = ergodic_params(cfg);
    let family = StreamFamily::new(cfg.mc.seed, FROZEN_CELL);
    let est = estimate_invariant(&frozen, &system.y0, &params, family.stream(0))?;
    let drift = estimate_averaged_drift(&system.slow_drift, &frozen, &system.y0, &params, family.stream(1))?;
    let diff = estimate_averaged_diffusion(&system.slow_diffusion, &frozen, &system.y0, &params, family.stream(2))?;
    let sigma = psd_sqrt(&diff.value, d)?;

    let mut w = csv_writer(ctx.create(&cfg.output.dir, "frozen.csv")?);
    w.write_record(["quantity", "component", "argument", "value", "std_error"]).map_err(slowfast::Error::from)?;
    let mut row = |q: &str, c: usize, arg: String, v: f64, se: String| {
        w.write_record([q.to_string(), c.to_string(), arg, v.to_string(), se]).map_err(slowfast::Error::from)
    };
    for i in 0..l {
        row("mean", i, String::new(), est.mean[i], est.mean_se[i].to_string())?;
        for j in 0..l {
            row("covariance", i, j.to_string(), est.covariance[i * l + j], est.covariance_se[i * l + j].to_string())?;
        }
        for (level, q) in &est.quantiles {
            row("quantile", i, level.to_string(), q[i], String::new())?;
        }
    }
    for (lag, rho) in &est.decay {
        row("decay", 0, lag.to_string(), *rho, String::new())?;
    }
    row("effective_sample_size", 0, String::new(), est.effective_sample_size, String::new())?;
    for i in 0..d {
        row("bbar", i, String::new(), drift.value[i], drift.std_error[i].to_string())?;
        for j in 0..d {
            row("abar", i, j.to_string(), diff.value[i * d + j], diff.std_error[i * d + j].to_string())?;
            row("sigmabar", i, j.to_string(), sigma[i * d + j], String::new())?;
        }
    }
    finish_csv(w)?;
    debug_assert_eq!(QUANTILE_LEVELS.len(), est.quantiles.len());

    let mut all = est.warnings.clone();
    all.extend(drift.warnings.iter().cloned());
    all.extend(diff.warnings.iter().cloned());
    stationarity_check(ctx, "frozen", &all);

    if let Some(report) = contraction_check(cfg, &frozen, &system.y0, exec, FROZEN_CELL + 1, ctx)? {
        let mut w = csv_writer(ctx.create(&cfg.output.dir, "contraction.csv")?);
        w.write_record(["s", "distance", "std_error", "bound", "flagged"]).map_err(slowfast::Error::from)?;
        for r in &report.rows {
            w.write_record([
                r.s.to_string(),
                r.distance.mean.to_string(),
                r.distance.std_error.to_string(),
                r.bound.to_string(),
                r.flagged.to_string(),
            ])
            .map_err(slowfast::Error::from)?;
        }
        finish_csv(w)?;
    }
    Ok(())
}

fn tabulate(cfg: &ExperimentConfig, system: &SlowFastSystem, exec: &Executor) -> Result<AveragedModel, RunError> {
    log::info!(
        "tabulating averaged coefficients on {} x {:?} nodes",
        cfg.ergodic.t_nodes.len(),
        cfg.ergodic.x_nodes.iter().map(Vec::len).collect::<Vec<_>>()
    );
    Ok(tabulate_averaged_model(
        system,
        &cfg.ergodic.t_nodes,
        &cfg.ergodic.x_nodes,
        &ergodic_params(cfg),
        StreamFamily::new(cfg.mc.seed, TABULATE_CELL),
        exec,
    )?)
}

fn nonstationary_check(ctx: &mut Context, name: &str, model: &AveragedModel) {
    let count: f64 = model.metadata.get("nonstationary_nodes").and_then(|v| v.parse().ok()).unwrap_or(0.0);
    if count > 0.0 {
        ctx.warnings.push(format!("{name}: {count} node(s) failed the half-sample stationarity test"));
    }
    ctx.check(format!("{name}.stationary_nodes"), count, Some(0.0), count == 0.0);
}

fn local_vol(cfg: &ExperimentConfig, lsv: &LsvModel, mc: &MeasureChange, exec: &Executor) -> Result<LocalVolModel, RunError> {
    let s_nodes = cfg.ergodic.s_nodes.as_ref().expect("LSV configs carry price nodes");
    log::info!("tabulating the local-volatility limit on {} x {} nodes", cfg.ergodic.t_nodes.len(), s_nodes.len());
    Ok(averaged_local_vol(
        lsv,
        mc,
        &cfg.ergodic.t_nodes,
        s_nodes,
        &ergodic_params(cfg),
        StreamFamily::new(cfg.mc.seed, TABULATE_CELL + 1),
        exec,
    )?)
}

fn average(cfg: &ExperimentConfig, exec: &Executor, ctx: &mut Context) -> Result<(), RunError> {
    let system = system(cfg)?;
    let model = tabulate(cfg, &system, exec)?;
    model.write_csv(ctx.create(&cfg.output.dir, "averaged_model.csv")?)?;
    nonstationary_check(ctx, "averaged_model", &model);
    if cfg.is_lsv() {
        let (lsv, mc) = lsv(cfg)?;
        let lv = local_vol(cfg, &lsv, &mc, exec)?;
        lv.model.write_csv(ctx.create(&cfg.output.dir, "local_vol.csv")?)?;
        nonstationary_check(ctx, "local_vol", &lv.model);
    }
    Ok(())
}

fn limit_model(cfg: &ExperimentConfig, system: &SlowFastSystem, exec: &Executor, ctx: &mut Context) -> Result<AveragedModel, RunError> {
    let closed = match cfg.converge.limit.as_str() {
        "tabulated" => None,
        _ => catalog::averaged_closed_form(&cfg.model.name, &cfg.params())?,
    };
    match closed {
        Some(m) => {
            log::info!("limit: closed-form averaged model");
            Ok(m)
        }
        None => {
            let m = tabulate(cfg, system, exec)?;
            m.write_csv(ctx.create(&cfg.output.dir, "averaged_model.csv")?)?;
            nonstationary_check(ctx, "averaged_model", &m);
            Ok(m)
        }
    }
}

fn converge(cfg: &ExperimentConfig, exec: &Executor, ctx: &mut Context) -> Result<(), RunError> {
    let system = system(cfg)?;
    let model = limit_model(cfg, &system, exec, ctx)?;
    let functionals =
        cfg.converge.functionals.iter().map(|n| Functional::by_name(n)).collect::<slowfast::Result<Vec<_>>>()?;
    let settings =
        ConvergenceSettings { grid: grid(cfg)?, n_paths: cfg.mc.n_paths, seed: cfg.mc.seed, sim: sim_options(cfg) };
    let report = weak_convergence_report(&system, &model, &cfg.epsilons, &functionals, &settings, exec)?;
    report.write_csv(ctx.create(&cfg.output.dir, "converge.csv")?, cfg.output.record_wall_ms)?;
    for w in &report.warnings {
        ctx.warnings.push(w.to_string());
    }
    for (j, f) in report.functionals.iter().enumerate() {
        let gaps = report.gaps(j);
        ctx.check(format!("{}.gap_monotone", f.name), monotone_excess(&gaps), Some(0.0), monotone_excess(&gaps) <= 0.0);
        let (gap, se) = *gaps.last().expect("non-empty sweep");
        let tol = cfg.converge.gap_tolerance.max(3.0 * se);
        ctx.check(format!("{}.final_gap", f.name), gap, Some(tol), gap <= tol);
    }

    if cfg.converge.aux_paths >= 2 {
        let grid = settings.grid;
        let mut w = csv_writer(ctx.create(&cfg.output.dir, "auxiliary.csv")?);
        w.write_record(["epsilon", "aux_gap", "aux_gap_se", "fast_l2_max", "n_paths"]).map_err(slowfast::Error::from)?;
        let (mut aux, mut l2) = (Vec::new(), Vec::new());
        for (i, &eps) in cfg.epsilons.iter().enumerate() {
            let n = cfg.converge.aux_paths;
            let gap = auxiliary_gap(
                &system,
                eps,
                &grid,
                n,
                StreamFamily::new(cfg.mc.seed, AUX_CELL_BASE + i as u32),
                exec,
                &settings.sim,
            )?;
            let profile = fast_second_moment(
                &system,
                eps,
                &grid,
                n,
                StreamFamily::new(cfg.mc.seed, L2_CELL_BASE + i as u32),
                exec,
                &settings.sim,
            )?;
            let max = profile.iter().cloned().fold(0.0, f64::max);
            log::info!("epsilon {eps}: auxiliary gap {} +- {}, max E|Y|^2 {max}", gap.mean, gap.std_error);
            w.write_record([eps.to_string(), gap.mean.to_string(), gap.std_error.to_string(), max.to_string(), n.to_string()])
                .map_err(slowfast::Error::from)?;
            aux.push(gap.mean);
            l2.push(max);
        }
        finish_csv(w)?;
        let worst = aux.windows(2).map(|p| p[1] - p[0]).fold(f64::NEG_INFINITY, f64::max);
        ctx.check("auxiliary_gap.decreasing", worst, Some(0.0), worst < 0.0 || aux.len() < 2);
        let (lo, hi) = l2.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        let spread = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
        ctx.check("fast_l2.spread", spread, Some(0.1), spread < 0.1);
    }
    Ok(())
}

/// The option described by the `[option]` section.
pub fn option_spec(cfg: &ExperimentConfig) -> Result<OptionSpec, RunError> {
    let Some(o) = &cfg.option else {
        return Err(ConfigErrors::single("option", "an [option] section with a cap is required").into());
    };
    let kind = match o.kind.as_str() {
        "european" => OptionKind::European,
        "asian" => OptionKind::Asian,
        "lookback" => OptionKind::Lookback { weight: WeightFn::by_name(&o.weight)?, delta: o.delta },
        _ => {
            let amount = o.amount.unwrap_or(0.0);
            match o.payoff.as_deref() {
                Some("digital") => OptionKind::Custom(CustomPayoff::Digital { strike: o.strike, amount }),
                _ => OptionKind::Custom(CustomPayoff::Constant(amount)),
            }
        }
    };
    let spec = OptionSpec { kind, strike: o.strike, cap: Some(o.cap), maturity: o.maturity };
    spec.validate()?;
    Ok(spec)
}

fn price(cfg: &ExperimentConfig, exec: &Executor, ctx: &mut Context) -> Result<(), RunError> {
    // Everything that can be rejected is rejected before any simulation.
    let (lsv, mc) = lsv(cfg)?;
    let spec = option_spec(cfg)?;
    let rn = risk_neutralize(&lsv, &mc)?;
    let lv = local_vol(cfg, &lsv, &mc, exec)?;
    lv.model.write_csv(ctx.create(&cfg.output.dir, "local_vol.csv")?)?;
    nonstationary_check(ctx, "local_vol", &lv.model);
    let settings = PricingSettings { step: cfg.grid.h, n_paths: cfg.mc.n_paths, seed: cfg.mc.seed, sim: sim_options(cfg) };
    let table = price_convergence_experiment(&rn, &mc.short_rate, &lv, &spec, &cfg.epsilons, &settings, exec)?;
    table.write_csv(ctx.create(&cfg.output.dir, "price.csv")?, cfg.output.record_wall_ms)?;
    let gaps: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.gap, r.gap_se)).collect();
    let excess = monotone_excess(&gaps);
    ctx.check("price.gap_monotone", excess, Some(0.0), excess <= 0.0);
    let (gap, se) = *gaps.last().expect("non-empty sweep");
    let tol = (cfg.price.gap_tolerance * lsv.s0).max(3.0 * se);
    ctx.check("price.final_gap", gap, Some(tol), gap <= tol);
    Ok(())
}

fn verify(cfg: &ExperimentConfig, exec: &Executor, ctx: &mut Context) -> Result<(), RunError> {
    let system = system(cfg)?;
    let (d, l) = (system.slow_dim(), system.fast_dim());
    let seed = cfg.mc.seed;
    let x_lo = cfg.ergodic.x_nodes.iter().map(|a| a[0]).fold(f64::INFINITY, f64::min);
    let x_hi = cfg.ergodic.x_nodes.iter().map(|a| a[a.len() - 1]).fold(f64::NEG_INFINITY, f64::max);
    let y_box = (-4.0, 4.0);
    let mut sampler = BoxSampler::new((0.0, cfg.grid.horizon), (x_lo, x_hi), y_box, seed);

    // A-priori structure of the coefficients.
    if let Some(beta) = system.fast_drift.constants().dissipativity {
        match check_dissipativity(&system.fast_drift, &system.fast_diffusion, &mut sampler, 4000) {
            Ok(est) => ctx.check("dissipativity", est, Some(beta), est >= beta * (1.0 - 1e-9) - 1e-12),
            Err(slowfast::Error::DissipativityViolated { ratio, .. }) => {
                ctx.check("dissipativity", -ratio, Some(beta), false)
            }
            Err(e) => return Err(e.into()),
        }
    }
    for field in [&system.slow_drift, &system.slow_diffusion, &system.fast_drift, &system.fast_diffusion] {
        for c in check_constants(field, &mut sampler, 2000).checks {
            ctx.check(c.name, c.statistic, c.threshold, c.passed);
        }
    }

    // Frozen equation at the initial state.
    let frozen = FrozenEquation::of_system(&system, 0.0, &system.x0)?;
    let params = ergodic_params(cfg);
    let family = StreamFamily::new(seed, VERIFY_CELL);
    let est = estimate_invariant(&frozen, &system.y0, &params, family.stream(0))?;
    let diff = estimate_averaged_diffusion(&system.slow_diffusion, &frozen, &system.y0, &params, family.stream(1))?;
    let mut warnings = est.warnings.clone();
    warnings.extend(diff.warnings.iter().cloned());
    stationarity_check(ctx, "frozen", &warnings);
    contraction_check(cfg, &frozen, &system.y0, exec, VERIFY_CELL + 1, ctx)?;
    let sigma = psd_sqrt(&diff.value, d)?;
    let mut residual = 0.0;
    let mut norm = 0.0;
    for i in 0..d {
        for j in 0..d {
            let sq: f64 = (0..d).map(|k| sigma[i * d + k] * sigma[k * d + j]).sum();
            residual += (sq - 2.0 * diff.value[i * d + j]).powi(2);
            norm += (2.0 * diff.value[i * d + j]).powi(2);
        }
    }
    let tol = 1e-10 * (1.0 + norm.sqrt());
    ctx.check("psd_sqrt.residual", residual.sqrt(), Some(tol), residual.sqrt() <= tol);

    // Moments of the coupled system at the coarsest epsilon.
    let grid = grid(cfg)?;
    let eps = cfg.epsilons[0];
    let n = cfg.mc.n_paths.min(1000);
    let bundle = simulate_slow_fast(&system, eps, &grid, n, StreamFamily::new(seed, VERIFY_CELL + 2), exec, &sim_options(cfg))?;
    for c in check_moment_bounds(&bundle, 2.0)?.checks {
        ctx.check(format!("moments.{}", c.name), c.statistic, c.threshold, c.passed);
    }
    debug_assert_eq!(bundle.width(), d + l);

    if cfg.is_lsv() {
        let (lsv, mc) = lsv(cfg)?;
        mc.validate(&lsv)?;
        let opts = sim_options(cfg);
        let n = cfg.mc.n_paths;
        let weight = girsanov_weight(&lsv, &mc, eps, &grid, n, StreamFamily::new(seed, VERIFY_CELL + 3), exec, &opts)?;
        let z = (weight.mean - 1.0).abs() / weight.std_error;
        ctx.check("girsanov.unit_mean", z, Some(3.0), z <= 3.0);
        // A call struck at 0 with an unreachable cap pays S_T.
        let spec = OptionSpec::european(0.0, 1e6 * lsv.s0, grid.t_end());
        let rn = risk_neutralize(&lsv, &mc)?;
        let model = PricingModel::SlowFast { system: &rn, short_rate: &mc.short_rate, eps, opts };
        let payoffs = discounted_payoffs(model, &[spec], cfg.grid.h, n, StreamFamily::new(seed, VERIFY_CELL + 4), exec)?;
        let disc = mc_estimate(&payoffs[0])?;
        let z = (disc.mean - lsv.s0).abs() / disc.std_error;
        ctx.check("martingale.discounted_price", z, Some(3.0), z <= 3.0);
    }

    let mut w = csv_writer(ctx.create(&cfg.output.dir, "verify.csv")?);
    w.write_record(["check", "statistic", "threshold", "passed"]).map_err(slowfast::Error::from)?;
    for c in &ctx.checks {
        w.write_record([
            c.name.clone(),
            c.statistic.to_string(),
            c.threshold.map(|t| t.to_string()).unwrap_or_default(),
            c.passed.to_string(),
        ])
        .map_err(slowfast::Error::from)?;
    }
    finish_csv(w)?;
    Ok(())
}
