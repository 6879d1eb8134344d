//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the verdict lines are
//! always printed. Positional arguments select criteria by number or by a
//! substring of their title; with none, everything runs.
//!
//! Oracles are computed here, independently of the library: Gaussian
//! expectations by Simpson quadrature, OU moments in closed form and the
//! limit option price by exact lognormal sampling with a different RNG.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use slowfast::catalog::{self, Params};
use slowfast::engine::{CoefficientField, Shape, SimOptions};
use slowfast::ergodic::{
    estimate_invariant, psd_sqrt, tabulate_averaged_model, verify_contraction, AveragedModel, ErgodicParams,
    FrozenEquation,
};
use slowfast::finance::{
    averaged_local_vol, discounted_payoffs, girsanov_weight, price_convergence_experiment, risk_neutralize,
    Mollifier, OptionSpec, PricingModel, PricingSettings, WeightFn,
};
use slowfast::lab::{
    auxiliary_gap, fast_second_moment, weak_convergence_report, ConvergenceSettings, Functional, AUX_CELL_BASE,
    L2_CELL_BASE,
};
use slowfast::stochastic::{mc_estimate, Executor, MonteCarloEstimate, StreamFamily, TimeGrid};
use slowfast_cli::config::ExperimentConfig;
use slowfast_cli::{run_experiment, Overrides, Subcommand};

const EPS: [f64; 3] = [0.2, 0.05, 0.0125];
const SEED: u64 = 20_240_601;

struct Verdict {
    passed: bool,
    detail: String,
}

/// Collects sub-checks of one criterion.
#[derive(Default)]
struct Report {
    parts: Vec<(bool, String)>,
}

impl Report {
    fn check(&mut self, ok: bool, msg: String) {
        self.parts.push((ok, msg));
    }

    fn verdict(self) -> Verdict {
        let passed = self.parts.iter().all(|p| p.0);
        let detail = self
            .parts
            .iter()
            .map(|(ok, m)| if *ok { m.clone() } else { format!("[fails] {m}") })
            .collect::<Vec<_>>()
            .join("; ");
        Verdict { passed, detail }
    }
}

fn exec() -> Executor {
    Executor::new(0).unwrap()
}

fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// `E f(Y)` for `Y ~ N(mean, var)` by composite Simpson on +-12 sd.
fn gauss_expect(f: impl Fn(f64) -> f64, mean: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let n = 40_000;
    let (a, b) = (mean - 12.0 * sd, mean + 12.0 * sd);
    let h = (b - a) / n as f64;
    let g = |y: f64| f(y) * (-(y - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt();
    let mut s = g(a) + g(b);
    for i in 1..n {
        s += g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn fmt_est(e: &MonteCarloEstimate) -> String {
    format!("{:.5} +- {:.5}", e.mean, e.std_error)
}

// 1. Ergodic time averages of the frozen OU equation.
fn frozen_ergodics() -> Verdict {
    let (b, c) = catalog::ou_linear(&params(&[("kappa", 2.0), ("c", 1.0)])).unwrap();
    let frozen = FrozenEquation::new(b, c, 0.0, vec![0.0]).unwrap();
    // Stationary law N(0, c^2 / (2 kappa)).
    let var_oracle = 1.0 / (2.0 * 2.0);
    let mut r = Report::default();

    let short = ErgodicParams { burn_in: Some(5.0), horizon: Some(100.0), step: 1e-3, ..ErgodicParams::default() };
    let start = Instant::now();
    let est = estimate_invariant(&frozen, &[0.0], &short, StreamFamily::new(SEED, 1).stream(0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    r.check(secs < 10.0, format!("horizon 100 runtime {secs:.2}s < 10s"));
    r.check(
        est.mean[0].abs() <= 3.0 * est.mean_se[0],
        format!("horizon 100 mean {:.4} within 3 SE ({:.4})", est.mean[0], 3.0 * est.mean_se[0]),
    );
    let rel_short = (est.covariance[0] - var_oracle).abs() / var_oracle;
    r.check(true, format!("horizon 100 variance {:.4} ({:.1}% off; informational)", est.covariance[0], 100.0 * rel_short));

    // The 2% variance tolerance needs a longer trajectory: the relative SD of
    // the variance estimate is about 10% at horizon 100.
    let long = ErgodicParams { horizon: Some(100_000.0), ..short };
    let start = Instant::now();
    let est = estimate_invariant(&frozen, &[0.0], &long, StreamFamily::new(SEED, 2).stream(0)).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let rel = (est.covariance[0] - var_oracle).abs() / var_oracle;
    r.check(rel <= 0.02, format!("horizon 1e5 variance {:.5} within 2% of 0.25 ({:.2}%)", est.covariance[0], 100.0 * rel));
    r.check(
        est.mean[0].abs() <= 3.0 * est.mean_se[0],
        format!("horizon 1e5 mean {:.5} within 3 SE ({:.5})", est.mean[0], 3.0 * est.mean_se[0]),
    );
    r.check(secs < 10.0, format!("horizon 1e5 runtime {secs:.2}s"));
    r.verdict()
}

// 2. Synchronous-coupling contraction of the frozen OU equation.
fn contraction() -> Verdict {
    let (b, c) = catalog::ou_linear(&params(&[("kappa", 2.0), ("c", 1.0)])).unwrap();
    let frozen = FrozenEquation::new(b, c, 0.0, vec![0.0]).unwrap();
    let times = [0.25, 0.5, 1.0];
    let report =
        verify_contraction(&frozen, &[1.0], &[-1.0], &times, 1e-3, 0.01, 500, StreamFamily::new(SEED, 3), &exec())
            .unwrap();
    let mut r = Report::default();
    for row in &report.rows {
        let oracle = (-4.0 * row.s).exp() * 4.0;
        let rel = (row.distance.mean - oracle).abs() / oracle;
        r.check(rel <= 0.01, format!("s={}: {:.6} vs {:.6} ({:.3}%)", row.s, row.distance.mean, oracle, 100.0 * rel));
    }
    r.check(report.rows.len() == times.len(), format!("{} rows", report.rows.len()));
    r.verdict()
}

/// `(2 + E cos 2Y) / 2` for the stationary fast law of REF-OU.
fn abar_oracle() -> f64 {
    gauss_expect(|y| (2.0 + (2.0 * y).cos()) / 2.0, 0.0, 0.25)
}

// 3. Averaged coefficients of REF-OU at (t, x) = (0, 1).
fn averaged_coefficients() -> Verdict {
    let sys = catalog::ref_ou(&Params::new()).unwrap();
    let ep = ErgodicParams { burn_in: Some(5.0), horizon: Some(20_000.0), step: 1e-3, ..ErgodicParams::default() };
    let model =
        tabulate_averaged_model(&sys, &[0.0], &[vec![1.0]], &ep, StreamFamily::new(SEED, 4), &exec()).unwrap();
    let table = model.table().unwrap();
    let (bbar, se) = (table.drift[0], table.drift_se[0]);
    let sigma = table.sigma[0];
    let abar = sigma * sigma / 2.0;
    let a_oracle = abar_oracle();
    let s_oracle = (2.0 * a_oracle).sqrt();
    let mut r = Report::default();
    r.check((a_oracle - 1.303265).abs() < 5e-7, format!("quadrature abar {a_oracle:.7} matches 1.303265"));
    r.check((bbar + 1.0).abs() <= 3.0 * se, format!("bbar {bbar:.5} within 3 SE ({:.5}) of -1", 3.0 * se));
    let rel_a = (abar - a_oracle).abs() / a_oracle;
    r.check(rel_a <= 0.01, format!("abar {abar:.5} ({:.3}% off)", 100.0 * rel_a));
    let rel_s = (sigma - 1.61448).abs() / 1.61448;
    r.check(rel_s <= 0.005, format!("sigmabar {sigma:.5} vs {s_oracle:.5} ({:.3}% off)", 100.0 * rel_s));
    r.verdict()
}

// 4. Symmetric PSD square root.
fn psd_property_suite() -> Verdict {
    let mut rng = StdRng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for case in 0..1000 {
        let n = 1 + case % 5;
        let rank = 1 + (case / 5) % n;
        let m: Vec<f64> = (0..n * rank).map(|_| StandardNormal.sample(&mut rng)).collect();
        // target = M M^T is PSD of the chosen rank; a = target / 2.
        let mut target = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                target[i * n + j] = (0..rank).map(|k| m[i * rank + k] * m[j * rank + k]).sum();
            }
        }
        let a: Vec<f64> = target.iter().map(|v| v / 2.0).collect();
        let Ok(s) = psd_sqrt(&a, n) else {
            failures += 1;
            continue;
        };
        let mut resid = 0.0;
        for i in 0..n {
            for j in 0..n {
                let sq: f64 = (0..n).map(|k| s[i * n + k] * s[k * n + j]).sum();
                resid += (sq - target[i * n + j]).powi(2);
            }
        }
        let norm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ratio = resid.sqrt() / (1e-10 * (1.0 + norm));
        worst = worst.max(ratio);
        let symmetric = (0..n).all(|i| (0..n).all(|j| s[i * n + j] == s[j * n + i] || (s[i * n + j] - s[j * n + i]).abs() < 1e-12));
        if ratio > 1.0 || !symmetric {
            failures += 1;
        }
    }
    let mut r = Report::default();
    r.check(failures == 0, format!("1000 matrices, {failures} failures, worst residual {worst:.3} x tolerance"));
    let s = psd_sqrt(&[1.25, 0.75, 0.75, 1.25], 2).unwrap();
    let expected = [1.5, 0.5, 0.5, 1.5];
    let err = s.iter().zip(expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.check(err <= 1e-12, format!("2x2 case error {err:.1e}"));
    r.verdict()
}

/// Closed-form averaged REF-OU model built from the quadrature oracle.
fn ref_ou_limit() -> AveragedModel {
    let sigma = (2.0 * abar_oracle()).sqrt();
    AveragedModel::closed_form(
        CoefficientField::new("bbar", 1, 0, Shape::Vector(1), |_, x, _, out| out[0] = -x[0]),
        CoefficientField::constant("sigmabar", 1, 0, Shape::Matrix(1, 1), vec![sigma]),
    )
    .unwrap()
}

fn monotone_within_slack(gaps: &[(f64, f64)]) -> bool {
    gaps.windows(2).all(|w| w[1].0 <= w[0].0 + w[0].1.hypot(w[1].1))
}

fn fmt_gaps(gaps: &[(f64, f64)]) -> String {
    gaps.iter().map(|(g, s)| format!("{g:.4}({s:.4})")).collect::<Vec<_>>().join(" ")
}

// 5. Weak convergence of E cos(X^eps_T) for REF-OU.
fn weak_convergence() -> Verdict {
    let sys = catalog::ref_ou(&Params::new()).unwrap();
    // Xbar_T ~ N(m, v): m = x0 e^{-T}, v = sigmabar^2 (1 - e^{-2T}) / 2.
    let m = (-1.0f64).exp();
    let v = 2.0 * abar_oracle() * (1.0 - (-2.0f64).exp()) / 2.0;
    let oracle = (-v / 2.0).exp() * m.cos();
    let n = 200_000;
    let settings = ConvergenceSettings {
        grid: TimeGrid::with_step(0.0, 1.0, 1e-3).unwrap(),
        n_paths: n,
        seed: SEED,
        sim: SimOptions::default(),
    };
    let f = Functional::by_name("cos").unwrap();
    let report = weak_convergence_report(&sys, &ref_ou_limit(), &EPS, &[f], &settings, &exec()).unwrap();
    let mut r = Report::default();
    r.check((v - 1.126888).abs() < 5e-6 && (oracle - 0.5312).abs() < 5e-5, format!("oracle v {v:.6}, E cos {oracle:.5}"));
    let lim = report.limit.estimates[0];
    r.check(lim.within(oracle, 3.0), format!("limit {} vs oracle", fmt_est(&lim)));
    let gaps = report.gaps(0);
    let (g, se) = *gaps.last().unwrap();
    r.check(monotone_within_slack(&gaps), format!("gaps vs limit {}", fmt_gaps(&gaps)));
    r.check(g <= 0.01f64.max(3.0 * se), format!("final gap {g:.4} <= {:.4}", 0.01f64.max(3.0 * se)));
    let to_oracle: Vec<(f64, f64)> =
        report.cells.iter().map(|c| ((c.estimates[0].mean - oracle).abs(), c.estimates[0].std_error)).collect();
    let (go, so) = *to_oracle.last().unwrap();
    r.check(monotone_within_slack(&to_oracle), format!("gaps vs oracle {}", fmt_gaps(&to_oracle)));
    r.check(go <= 0.01f64.max(3.0 * so), format!("final oracle gap {go:.4}"));
    r.check(true, format!("n = {n}"));
    r.verdict()
}

// 6. Khasminskii auxiliary gap shrinks with eps.
fn auxiliary() -> Verdict {
    let sys = catalog::ref_ou(&Params::new()).unwrap();
    let grid = TimeGrid::with_step(0.0, 1.0, 1e-3).unwrap();
    let gaps: Vec<MonteCarloEstimate> = EPS
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let fam = StreamFamily::new(SEED, AUX_CELL_BASE + i as u32);
            auxiliary_gap(&sys, e, &grid, 20_000, fam, &exec(), &SimOptions::default()).unwrap()
        })
        .collect();
    let mut r = Report::default();
    let decreasing = gaps.windows(2).all(|w| w[1].mean < w[0].mean);
    r.check(decreasing, gaps.iter().map(fmt_est).collect::<Vec<_>>().join(" > "));
    r.verdict()
}

// 7. Uniform-in-eps bound on E|Y^eps_t|^2.
fn fast_moment() -> Verdict {
    let sys = catalog::ref_ou(&Params::new()).unwrap();
    let grid = TimeGrid::with_step(0.0, 1.0, 1e-3).unwrap();
    let maxima: Vec<f64> = EPS
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let fam = StreamFamily::new(SEED, L2_CELL_BASE + i as u32);
            let profile = fast_second_moment(&sys, e, &grid, 20_000, fam, &exec(), &SimOptions::default()).unwrap();
            profile.into_iter().fold(0.0, f64::max)
        })
        .collect();
    let hi = maxima.iter().cloned().fold(0.0, f64::max);
    let lo = maxima.iter().cloned().fold(f64::INFINITY, f64::min);
    let bound = 1.0 + sys.y0[0] * sys.y0[0];
    let mut r = Report::default();
    r.check((hi - lo) / hi < 0.1, format!("max E|Y|^2 {maxima:.4?}, spread {:.2}%", 100.0 * (hi - lo) / hi));
    r.check(hi < bound, format!("below 1 + |y0|^2 = {bound}"));
    r.verdict()
}

// 8. Measure change: unit-mean density and discounted-price martingale.
fn girsanov() -> Verdict {
    let (lsv, mc) = catalog::lsv_tanh(&Params::new()).unwrap();
    let grid = TimeGrid::with_step(0.0, lsv.horizon, 1e-3).unwrap();
    let rn = risk_neutralize(&lsv, &mc).unwrap();
    let n = 50_000;
    let mut r = Report::default();
    for (i, &e) in EPS.iter().enumerate() {
        let opts = SimOptions::default();
        let w = girsanov_weight(&lsv, &mc, e, &grid, n, StreamFamily::new(SEED, 10 + i as u32), &exec(), &opts).unwrap();
        r.check(w.within(1.0, 3.0), format!("eps {e}: E dQ/dP {}", fmt_est(&w)));
        // min(S_T, 10 s0) as a call struck at 0 with cap 10 s0.
        let spec = OptionSpec::european(0.0, 10.0 * lsv.s0, lsv.horizon);
        let model = PricingModel::SlowFast { system: &rn, short_rate: &mc.short_rate, eps: e, opts };
        let p = discounted_payoffs(model, &[spec], 1e-3, n, StreamFamily::new(SEED, 20 + i as u32), &exec()).unwrap();
        let est = mc_estimate(&p[0]).unwrap();
        r.check(est.within(lsv.s0, 3.0), format!("E e^(-rT) S_T {}", fmt_est(&est)));
    }
    r.verdict()
}

/// Capped call on the Black-Scholes law with volatility `fbar`, by exact
/// terminal sampling.
fn lognormal_oracle(s0: f64, r: f64, fbar: f64, t: f64, k: f64, cap: f64, n: usize) -> MonteCarloEstimate {
    let mut rng = StdRng::seed_from_u64(SEED ^ 0x5eed);
    let disc = (-r * t).exp();
    let drift = (r - 0.5 * fbar * fbar) * t;
    let vol = fbar * t.sqrt();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut rng);
        let s = s0 * (drift + vol * z).exp();
        let p = disc * (s - k).max(0.0).min(cap);
        sum += p;
        sum_sq += p * p;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean) * n as f64 / (n - 1) as f64;
    MonteCarloEstimate { mean, std_error: (var / n as f64).sqrt(), n_samples: n }
}

fn norm_cdf(x: f64) -> f64 {
    gauss_expect(|y| if y <= x { 1.0 } else { 0.0 }, 0.0, 1.0)
}

fn black_scholes_call(s0: f64, k: f64, r: f64, vol: f64, t: f64) -> f64 {
    let d1 = ((s0 / k).ln() + (r + 0.5 * vol * vol) * t) / (vol * t.sqrt());
    let d2 = d1 - vol * t.sqrt();
    s0 * norm_cdf(d1) - k * (-r * t).exp() * norm_cdf(d2)
}

// 9. Capped-call prices converge to the local-volatility limit.
fn price_convergence() -> Verdict {
    let (lsv, mc) = catalog::lsv_tanh(&Params::new()).unwrap();
    let rn = risk_neutralize(&lsv, &mc).unwrap();
    let (k, cap, rate) = (1.0, 2.0, 0.02);
    let spec = OptionSpec::european(k, cap, lsv.horizon);
    let ep = ErgodicParams { burn_in: Some(5.0), horizon: Some(5_000.0), step: 1e-3, ..ErgodicParams::default() };
    let s_nodes: Vec<f64> = (-4..=4).map(|i| lsv.s0 * (0.4 * i as f64).exp()).collect();
    let lv = averaged_local_vol(&lsv, &mc, &[0.0, 1.0], &s_nodes, &ep, StreamFamily::new(SEED, 30), &exec()).unwrap();
    let settings = PricingSettings { step: 1e-3, n_paths: 200_000, seed: SEED, sim: SimOptions::default() };
    let table = price_convergence_experiment(&rn, &mc.short_rate, &lv, &spec, &EPS, &settings, &exec()).unwrap();

    // Fbar^2 = E (f0 + f1 tanh Y)^2 with Y ~ N(0, 1/4).
    let fbar = gauss_expect(|y| (0.25 + 0.05 * y.tanh()).powi(2), 0.0, 0.25).sqrt();
    let oracle = lognormal_oracle(lsv.s0, rate, fbar, lsv.horizon, k, cap, 10_000_000);
    let closed = black_scholes_call(lsv.s0, k, rate, fbar, 1.0) - black_scholes_call(lsv.s0, k + cap, rate, fbar, 1.0);

    let mut r = Report::default();
    let gaps: Vec<(f64, f64)> = table.rows.iter().map(|row| (row.gap, row.gap_se)).collect();
    r.check(monotone_within_slack(&gaps), format!("gaps {}", fmt_gaps(&gaps)));
    let (g, se) = *gaps.last().unwrap();
    let tol = (0.005 * lsv.s0).max(3.0 * se);
    r.check(g <= tol, format!("final gap {g:.5} <= {tol:.5}"));
    let lim = table.limit.estimate;
    let comb = lim.std_error.hypot(oracle.std_error);
    r.check(
        (lim.mean - oracle.mean).abs() <= 3.0 * comb,
        format!("limit {} vs 1e7-path oracle {} (closed form {closed:.5}, Fbar {fbar:.5})", fmt_est(&lim), fmt_est(&oracle)),
    );
    r.verdict()
}

// 10. Lookback mollifier.
fn mollifier() -> Verdict {
    let mut r = Report::default();
    let h = 0.01;
    let constant = vec![1.7; 101];
    let mut worst: f64 = 0.0;
    for delta in [1e-4, 0.003, 0.01, 0.0125, 0.05, 0.2, 0.37, 1.0, 3.0] {
        let m = Mollifier::new(WeightFn::One, delta).unwrap();
        for v in m.window_averages(&constant, h) {
            worst = worst.max((v - 1.7).abs());
        }
    }
    r.check(worst <= 1e-12, format!("constant paths reproduced (max error {worst:.1e})"));

    // eta(theta) = theta on [-1, 0]; node k sits at theta = -1 + k h.
    let linear: Vec<f64> = (0..=100).map(|k| -1.0 + k as f64 * h).collect();
    let m = Mollifier::new(WeightFn::One, 0.2).unwrap();
    let at = m.window_averages(&linear, h)[50];
    r.check((at + 0.6).abs() <= 1e-12, format!("linear path window average {at:.15}"));

    // Tent peaking at theta = -0.3 with height 1; sup of a*eta is 1.
    let fine = 0.001;
    let tent: Vec<f64> = (0..=1000)
        .map(|k| {
            let th = -1.0 + k as f64 * fine;
            (1.0 - 2.0 * (th + 0.3).abs()).max(0.0)
        })
        .collect();
    let diffs: Vec<f64> = EPS
        .iter()
        .map(|&d| (Mollifier::new(WeightFn::One, d).unwrap().sup(&tent, fine) - 1.0).abs())
        .collect();
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
    r.check(decreasing, format!("delta sweep differences {diffs:.5?}"));
    r.verdict()
}

fn cli_run(text: &str, sub: Subcommand, workers: usize, dir: &std::path::Path) -> Vec<u8> {
    let ov = Overrides { workers: Some(workers), out: Some(dir.to_path_buf()), ..Overrides::default() };
    let cfg = ExperimentConfig::parse(text, &ov, None).unwrap();
    let outcome = run_experiment(&cfg, sub).unwrap();
    assert!(outcome.error.is_none(), "{:?}", outcome.error);
    let file = if sub == Subcommand::Converge { "converge.csv" } else { "price.csv" };
    std::fs::read(dir.join(file)).unwrap()
}

// 11. Byte-identical outputs across worker counts.
fn reproducibility() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let converge = "[model]\nname = \"ref-ou\"\n[mc]\nn_paths = 3000\nseed = 99\n[converge]\naux_paths = 0\nfunctionals = [\"cos\", \"tanh@mid\", \"sup-tanh\"]\n";
    let price = "[model]\nname = \"lsv-tanh\"\n[mc]\nn_paths = 3000\nseed = 99\n[ergodic]\nhorizon = 50.0\n[option]\nkind = \"lookback\"\nstrike = 1.0\ncap = 2.0\n";
    let mut r = Report::default();
    for (name, text, sub) in [("converge", converge, Subcommand::Converge), ("price", price, Subcommand::Price)] {
        let outputs: Vec<Vec<u8>> =
            [1, 2, 4].iter().map(|&w| cli_run(text, sub, w, &tmp.path().join(format!("{name}-{w}")))).collect();
        let same = outputs.windows(2).all(|p| p[0] == p[1]);
        r.check(same && !outputs[0].is_empty(), format!("{name}.csv identical for 1, 2 and 4 workers ({} bytes)", outputs[0].len()));
    }
    r.verdict()
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "frozen-equation ergodics", frozen_ergodics),
        (2, "contraction", contraction),
        (3, "averaged-coefficient recovery", averaged_coefficients),
        (4, "psd_sqrt property suite", psd_property_suite),
        (5, "weak convergence", weak_convergence),
        (6, "auxiliary gap", auxiliary),
        (7, "uniform fast L2 bound", fast_moment),
        (8, "girsanov sanity", girsanov),
        (9, "price convergence", price_convergence),
        (10, "mollifier", mollifier),
        (11, "reproducibility", reproducibility),
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<&Criterion> = criteria
        .iter()
        .filter(|(n, title, _)| filters.is_empty() || filters.iter().any(|f| *f == n.to_string() || title.contains(f.as_str())))
        .collect();
    let mut failed = Vec::new();
    for (n, title, run) in &selected {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict { passed: false, detail: format!("panicked: {}", msg.unwrap_or_default()) }
        });
        let tag = if verdict.passed { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {tag} {title} ({:.1}s): {}", start.elapsed().as_secs_f64(), verdict.detail);
        if !verdict.passed {
            failed.push(*n);
        }
    }
    println!("acceptance: {}/{} criteria passed", selected.len() - failed.len(), selected.len());
    if !failed.is_empty() {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
