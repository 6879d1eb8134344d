//! Experiment configuration: TOML in, a fully defaulted and validated
//! [`ExperimentConfig`] out.
//!
//! Parsing walks the document by hand rather than through a derived
//! deserializer so that every problem (bad value, missing field, unknown
//! key) is collected and reported in one pass.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::Serialize;
use sha2::{Digest, Sha256};
use slowfast::catalog::{self, Params};
use slowfast::finance::{OPTION_KINDS, WEIGHT_FUNCTIONS};
use slowfast::lab::FUNCTIONALS;
use toml::{Table, Value};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SLOWFAST_OUT";
pub const DEFAULT_OUT_DIR: &str = "slowfast-out";
pub const MIN_PATHS: usize = 100;
pub const LIMIT_MODES: [&str; 3] = ["auto", "closed-form", "tabulated"];
pub const CUSTOM_PAYOFFS: [&str; 2] = ["constant", "digital"];
/// Catalog entries that define a local stochastic volatility model.
pub const LSV_MODELS: [&str; 1] = ["lsv-tanh"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

/// Every violated field of a configuration.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}", render(.0))]
pub struct ConfigErrors(pub Vec<FieldError>);

fn render(errors: &[FieldError]) -> String {
    errors.iter().map(|e| format!("{}: {}", e.field, e.message)).collect::<Vec<_>>().join("\n")
}

impl ConfigErrors {
    pub fn single(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self(vec![FieldError { field: field.into(), message: message.into() }])
    }

    pub fn mentions(&self, field: &str) -> bool {
        self.0.iter().any(|e| e.field == field)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConfig {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridConfig {
    #[serde(rename = "T")]
    pub horizon: f64,
    pub h: f64,
    /// Fast substeps per `eps`.
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// 0 selects one worker per core.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicConfig {
    pub burn_in: f64,
    pub horizon: f64,
    pub step: f64,
    pub n_batches: usize,
    pub t_nodes: Vec<f64>,
    /// One axis per slow dimension.
    pub x_nodes: Vec<Vec<f64>>,
    /// Price axis of the local-volatility limit (LSV models only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_nodes: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeConfig {
    pub functionals: Vec<String>,
    pub limit: String,
    /// Paths for the auxiliary-gap and fast-moment sweeps; 0 skips them.
    pub aux_paths: usize,
    pub gap_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionConfig {
    pub kind: String,
    pub strike: f64,
    pub cap: f64,
    pub maturity: f64,
    pub weight: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amount: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceConfig {
    /// Final-gap tolerance as a fraction of `s0`.
    pub gap_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub record_wall_ms: bool,
}

/// Normalized experiment description; every field is explicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub epsilons: Vec<f64>,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub mc: McConfig,
    pub ergodic: ErgodicConfig,
    pub converge: ConvergeConfig,
    pub price: PriceConfig,
    pub output: OutputConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub option: Option<OptionConfig>,
}

/// Command-line values that replace file values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Effective configuration as TOML, as echoed to the output directory.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("configuration serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn params(&self) -> Params {
        self.model.params.clone()
    }

    pub fn is_lsv(&self) -> bool {
        LSV_MODELS.contains(&self.model.name.as_str())
    }
}

/// Parses and validates `text` with no overrides, taking the default output
/// directory from the environment.
pub fn validate_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    ExperimentConfig::parse(text, &Overrides::default(), std::env::var(OUT_ENV).ok().as_deref())
}

/// Collects errors while walking the TOML tree.
struct Walker {
    errors: Vec<FieldError>,
}

fn join(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

impl Walker {
    fn error(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.errors.push(FieldError { field: field.into(), message: message.into() });
    }

    fn unknown_keys(&mut self, table: &Table, section: &str, allowed: &[&str]) {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                self.error(join(section, key), format!("unknown key; allowed here: {}", allowed.join(", ")));
            }
        }
    }

    fn table<'t>(&mut self, table: &'t Table, section: &str, key: &str) -> Option<&'t Table> {
        match table.get(key) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.error(join(section, key), "expected a table");
                None
            }
        }
    }

    fn f64(&mut self, table: &Table, section: &str, key: &str) -> Option<f64> {
        let v = table.get(key)?;
        match as_f64(v) {
            Some(f) if f.is_finite() => Some(f),
            _ => {
                self.error(join(section, key), format!("expected a finite number, got {v}"));
                None
            }
        }
    }

    fn uint(&mut self, table: &Table, section: &str, key: &str) -> Option<u64> {
        let v = table.get(key)?;
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                self.error(join(section, key), format!("expected a non-negative integer, got {v}"));
                None
            }
        }
    }

    fn bool(&mut self, table: &Table, section: &str, key: &str) -> Option<bool> {
        let v = table.get(key)?;
        match v {
            Value::Boolean(b) => Some(*b),
            _ => {
                self.error(join(section, key), format!("expected true or false, got {v}"));
                None
            }
        }
    }

    fn string(&mut self, table: &Table, section: &str, key: &str) -> Option<String> {
        let v = table.get(key)?;
        match v {
            Value::String(s) => Some(s.clone()),
            _ => {
                self.error(join(section, key), format!("expected a string, got {v}"));
                None
            }
        }
    }

    fn choice(&mut self, table: &Table, section: &str, key: &str, options: &[&str]) -> Option<String> {
        let s = self.string(table, section, key)?;
        if options.contains(&s.as_str()) {
            Some(s)
        } else {
            self.error(join(section, key), format!("`{s}` is not one of: {}", options.join(", ")));
            None
        }
    }

    fn f64_list(&mut self, value: &Value, field: &str) -> Option<Vec<f64>> {
        let Value::Array(items) = value else {
            self.error(field, format!("expected an array of numbers, got {value}"));
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            match as_f64(item) {
                Some(f) if f.is_finite() => out.push(f),
                _ => {
                    self.error(format!("{field}[{i}]"), format!("expected a finite number, got {item}"));
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn strictly_increasing(&mut self, values: &[f64], field: &str) -> bool {
        if values.is_empty() {
            self.error(field, "must not be empty");
            return false;
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            self.error(field, "must be strictly increasing");
            return false;
        }
        true
    }

    fn positive(&mut self, value: f64, field: &str) -> bool {
        if value > 0.0 {
            true
        } else {
            self.error(field, format!("{value} must be positive"));
            false
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

const TOP_KEYS: [&str; 9] = ["model", "epsilons", "grid", "mc", "ergodic", "converge", "option", "price", "output"];

impl ExperimentConfig {
    /// Parses `text`, applies `overrides` and fills defaults. `env_out` is
    /// the output directory used when neither the file nor the overrides
    /// name one.
    pub fn parse(text: &str, overrides: &Overrides, env_out: Option<&str>) -> Result<Self, ConfigErrors> {
        let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors::single("<document>", e.to_string()))?;
        let mut w = Walker { errors: Vec::new() };
        w.unknown_keys(&root, "", &TOP_KEYS);
        let empty = Table::new();

        // [model]
        let model_t = w.table(&root, "", "model").unwrap_or(&empty);
        w.unknown_keys(model_t, "model", &["name", "params"]);
        let name = match w.string(model_t, "model", "name") {
            Some(n) => n,
            None => {
                if !model_t.contains_key("name") {
                    w.error("model.name", format!("required; available: {}", catalog::SYSTEMS.join(", ")));
                }
                String::new()
            }
        };
        let mut params = Params::new();
        if let Some(pt) = w.table(model_t, "model", "params") {
            for key in pt.keys() {
                if let Some(v) = w.f64(pt, "model.params", key) {
                    params.insert(key.clone(), v);
                }
            }
        }
        let system = if name.is_empty() {
            None
        } else if !catalog::SYSTEMS.contains(&name.as_str()) {
            w.error("model.name", format!("unknown model `{name}`; available: {}", catalog::SYSTEMS.join(", ")));
            None
        } else {
            match catalog::system(&name, &params) {
                Ok(s) => Some(s),
                Err(e) => {
                    w.error("model.params", e.to_string());
                    None
                }
            }
        };

        // epsilons
        let epsilons = match root.get("epsilons") {
            None => vec![0.2, 0.05, 0.0125],
            Some(v) => w.f64_list(v, "epsilons").unwrap_or_default(),
        };
        if root.contains_key("epsilons") && epsilons.is_empty() && w.errors.iter().all(|e| !e.field.starts_with("epsilons")) {
            w.error("epsilons", "must not be empty");
        }
        let mut eps_ok = true;
        for (i, e) in epsilons.iter().enumerate() {
            if !(*e > 0.0 && *e < 1.0) {
                w.error(format!("epsilons[{i}]"), format!("{e} must lie strictly inside (0, 1)"));
                eps_ok = false;
            }
        }
        if eps_ok && epsilons.windows(2).any(|p| p[1] >= p[0]) {
            w.error("epsilons", "must be strictly decreasing");
        }

        // [grid]
        let grid_t = w.table(&root, "", "grid").unwrap_or(&empty);
        w.unknown_keys(grid_t, "grid", &["T", "h", "nu"]);
        let default_t = system.as_ref().map_or(1.0, |s| s.horizon);
        let grid = GridConfig {
            horizon: w.f64(grid_t, "grid", "T").unwrap_or(default_t),
            h: w.f64(grid_t, "grid", "h").unwrap_or(1e-3),
            nu: w.f64(grid_t, "grid", "nu").unwrap_or(slowfast::engine::DEFAULT_SUBSTEPS_PER_EPS),
        };
        if w.positive(grid.horizon, "grid.T") && w.positive(grid.h, "grid.h") && grid.h > grid.horizon {
            w.error("grid.h", format!("step {} exceeds the horizon {}", grid.h, grid.horizon));
        }
        w.positive(grid.nu, "grid.nu");

        // [mc]
        let mc_t = w.table(&root, "", "mc").unwrap_or(&empty);
        w.unknown_keys(mc_t, "mc", &["n_paths", "seed", "workers"]);
        let mc = McConfig {
            n_paths: overrides.paths.or(w.uint(mc_t, "mc", "n_paths").map(|v| v as usize)).unwrap_or(10_000),
            seed: overrides.seed.or(w.uint(mc_t, "mc", "seed")).unwrap_or(20_240_601),
            workers: overrides.workers.or(w.uint(mc_t, "mc", "workers").map(|v| v as usize)).unwrap_or(0),
        };
        if mc.n_paths < MIN_PATHS {
            w.error("mc.n_paths", format!("{} is below the minimum of {MIN_PATHS}", mc.n_paths));
        }

        // [ergodic]
        let erg_t = w.table(&root, "", "ergodic").unwrap_or(&empty);
        w.unknown_keys(erg_t, "ergodic", &["burn_in", "horizon", "step", "n_batches", "t_nodes", "x_nodes", "s_nodes"]);
        // Without a declared dissipativity constant the defaults assume beta = 1.
        let beta = system.as_ref().and_then(|s| s.fast_drift.constants().dissipativity).unwrap_or(1.0);
        let burn_in = w.f64(erg_t, "ergodic", "burn_in").unwrap_or(slowfast::ergodic::DEFAULT_BURN_IN_BETAS / beta);
        let ergodic_horizon = w.f64(erg_t, "ergodic", "horizon").unwrap_or(slowfast::ergodic::DEFAULT_HORIZON_BETAS / beta);
        let step = w.f64(erg_t, "ergodic", "step").unwrap_or(1e-3);
        if burn_in < 0.0 {
            w.error("ergodic.burn_in", format!("{burn_in} must be non-negative"));
        }
        if ergodic_horizon <= burn_in {
            w.error("ergodic.horizon", format!("{ergodic_horizon} must exceed burn_in {burn_in}"));
        }
        if w.positive(step, "ergodic.step") && step > ergodic_horizon - burn_in {
            w.error("ergodic.step", "longer than the averaging window");
        }
        let n_batches = w.uint(erg_t, "ergodic", "n_batches").map_or(50, |v| v as usize);
        if n_batches < 2 {
            w.error("ergodic.n_batches", "need at least 2 batches");
        }
        let t_nodes = match erg_t.get("t_nodes") {
            Some(v) => w.f64_list(v, "ergodic.t_nodes").unwrap_or_default(),
            None => vec![0.0, 0.5 * grid.horizon, grid.horizon],
        };
        if erg_t.contains_key("t_nodes") || !t_nodes.is_empty() {
            w.strictly_increasing(&t_nodes, "ergodic.t_nodes");
        }
        let x0 = system.as_ref().map_or(vec![0.0], |s| s.x0.clone());
        let x_nodes = match erg_t.get("x_nodes") {
            Some(Value::Array(axes)) if axes.iter().all(|a| a.is_array()) => axes
                .iter()
                .enumerate()
                .map(|(i, a)| w.f64_list(a, &format!("ergodic.x_nodes[{i}]")).unwrap_or_default())
                .collect(),
            Some(Value::Array(axis)) if !axis.is_empty() => vec![w.f64_list(&Value::Array(axis.clone()), "ergodic.x_nodes").unwrap_or_default()],
            Some(other) => {
                w.error("ergodic.x_nodes", format!("expected an array of axes, got {other}"));
                Vec::new()
            }
            None => x0.iter().map(|c| linspace(c - 5.0, c + 5.0, 21)).collect(),
        };
        if x_nodes.len() != x0.len() {
            w.error("ergodic.x_nodes", format!("{} axes for slow dimension {}", x_nodes.len(), x0.len()));
        }
        for (i, axis) in x_nodes.iter().enumerate() {
            w.strictly_increasing(axis, &format!("ergodic.x_nodes[{i}]"));
        }
        let is_lsv = LSV_MODELS.contains(&name.as_str());
        let s_nodes = match erg_t.get("s_nodes") {
            Some(v) => {
                let nodes = w.f64_list(v, "ergodic.s_nodes").unwrap_or_default();
                if w.strictly_increasing(&nodes, "ergodic.s_nodes") && nodes[0] <= 0.0 {
                    w.error("ergodic.s_nodes", "price nodes must be positive");
                }
                if !is_lsv {
                    w.error("ergodic.s_nodes", format!("only used by LSV models ({})", LSV_MODELS.join(", ")));
                }
                Some(nodes)
            }
            None if is_lsv => {
                let s0 = params.get("s0").copied().unwrap_or(1.0);
                Some(linspace(-2.0, 2.0, 17).into_iter().map(|u| s0 * u.exp()).collect())
            }
            None => None,
        };
        let ergodic = ErgodicConfig { burn_in, horizon: ergodic_horizon, step, n_batches, t_nodes, x_nodes, s_nodes };

        // [converge]
        let conv_t = w.table(&root, "", "converge").unwrap_or(&empty);
        w.unknown_keys(conv_t, "converge", &["functionals", "limit", "aux_paths", "gap_tolerance"]);
        let functionals = match conv_t.get("functionals") {
            None => vec!["cos".to_string()],
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .filter_map(|(i, v)| match v {
                    Value::String(s) if FUNCTIONALS.contains(&s.as_str()) => Some(s.clone()),
                    _ => {
                        w.error(format!("converge.functionals[{i}]"), format!("{v} is not one of: {}", FUNCTIONALS.join(", ")));
                        None
                    }
                })
                .collect(),
            Some(v) => {
                w.error("converge.functionals", format!("expected an array of names, got {v}"));
                Vec::new()
            }
        };
        if functionals.is_empty() && !w.errors.iter().any(|e| e.field.starts_with("converge.functionals")) {
            w.error("converge.functionals", "must not be empty");
        }
        let limit = w.choice(conv_t, "converge", "limit", &LIMIT_MODES).unwrap_or_else(|| "auto".into());
        if limit == "closed-form" && !name.is_empty() {
            if let Ok(None) = catalog::averaged_closed_form(&name, &params) {
                w.error("converge.limit", format!("`{name}` has no closed-form averaged model"));
            }
        }
        let aux_paths = w.uint(conv_t, "converge", "aux_paths").map_or(mc.n_paths.min(10_000), |v| v as usize);
        if aux_paths == 1 {
            w.error("converge.aux_paths", "use 0 to skip or at least 2 paths");
        }
        let gap_tolerance = w.f64(conv_t, "converge", "gap_tolerance").unwrap_or(0.01);
        if gap_tolerance < 0.0 {
            w.error("converge.gap_tolerance", "must be non-negative");
        }
        let converge = ConvergeConfig { functionals, limit, aux_paths, gap_tolerance };

        // [option]
        let option = w.table(&root, "", "option").map(|t| parse_option(&mut w, t, grid.horizon));

        // [price]
        let price_t = w.table(&root, "", "price").unwrap_or(&empty);
        w.unknown_keys(price_t, "price", &["gap_tolerance"]);
        let price = PriceConfig { gap_tolerance: w.f64(price_t, "price", "gap_tolerance").unwrap_or(0.005) };
        if price.gap_tolerance < 0.0 {
            w.error("price.gap_tolerance", "must be non-negative");
        }

        // [output]
        let out_t = w.table(&root, "", "output").unwrap_or(&empty);
        w.unknown_keys(out_t, "output", &["dir", "record_wall_ms"]);
        let dir = overrides
            .out
            .clone()
            .or_else(|| w.string(out_t, "output", "dir").map(PathBuf::from))
            .or_else(|| env_out.filter(|s| !s.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        let output = OutputConfig { dir, record_wall_ms: w.bool(out_t, "output", "record_wall_ms").unwrap_or(false) };

        if !w.errors.is_empty() {
            // Stable order: by field name, then message.
            let unique: BTreeSet<(String, String)> = w.errors.into_iter().map(|e| (e.field, e.message)).collect();
            return Err(ConfigErrors(unique.into_iter().map(|(field, message)| FieldError { field, message }).collect()));
        }
        Ok(Self { epsilons, model: ModelConfig { name, params }, grid, mc, ergodic, converge, price, output, option })
    }
}

fn parse_option(w: &mut Walker, t: &Table, default_maturity: f64) -> OptionConfig {
    const S: &str = "option";
    w.unknown_keys(t, S, &["kind", "strike", "cap", "maturity", "weight", "delta", "payoff", "amount"]);
    let kind = w.choice(t, S, "kind", &OPTION_KINDS).unwrap_or_else(|| "european".into());
    let strike = w.f64(t, S, "strike");
    let cap = w.f64(t, S, "cap");
    let maturity = w.f64(t, S, "maturity").unwrap_or(default_maturity);
    let weight = w.choice(t, S, "weight", &WEIGHT_FUNCTIONS).unwrap_or_else(|| "one".into());
    let delta = w.f64(t, S, "delta");
    let payoff = w.choice(t, S, "payoff", &CUSTOM_PAYOFFS);
    let amount = w.f64(t, S, "amount");

    if !t.contains_key("cap") {
        w.error("option.cap", "required: payoffs must be bounded (10 * s0 is a reasonable choice)");
    }
    match cap {
        Some(c) if c < 0.0 => w.error("option.cap", format!("{c} must be non-negative")),
        _ => {}
    }
    w.positive(maturity, "option.maturity");
    if let Some(d) = delta {
        w.positive(d, "option.delta");
        if kind != "lookback" {
            w.error("option.delta", "only used by lookback options");
        }
    }
    if weight != "one" && kind != "lookback" {
        w.error("option.weight", "only used by lookback options");
    }
    let custom = kind == "custom-bounded";
    if custom {
        match payoff.as_deref() {
            None if !t.contains_key("payoff") => {
                w.error("option.payoff", format!("required for custom-bounded options: {}", CUSTOM_PAYOFFS.join(", ")))
            }
            Some("digital") if strike.is_none() && !t.contains_key("strike") => {
                w.error("option.strike", "required for digital payoffs")
            }
            _ => {}
        }
        if amount.is_none() && !t.contains_key("amount") {
            w.error("option.amount", "required for custom-bounded options");
        }
        if let (Some(a), Some(c)) = (amount, cap) {
            if a.abs() > c {
                w.error("option.amount", format!("{a} exceeds the cap {c}"));
            }
        }
    } else {
        if t.contains_key("payoff") {
            w.error("option.payoff", "only used by custom-bounded options");
        }
        if t.contains_key("amount") {
            w.error("option.amount", "only used by custom-bounded options");
        }
        if strike.is_none() && !t.contains_key("strike") {
            w.error("option.strike", "required");
        }
    }
    OptionConfig {
        kind,
        strike: strike.unwrap_or(0.0),
        cap: cap.unwrap_or(f64::NAN),
        maturity,
        weight,
        delta,
        payoff,
        amount,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
        ExperimentConfig::parse(text, &Overrides::default(), None)
    }

    #[test]
    fn minimal_config_is_fully_populated() {
        let cfg = parse("[model]\nname = \"ref-ou\"\n").unwrap();
        assert_eq!(cfg.epsilons, vec![0.2, 0.05, 0.0125]);
        assert_eq!(cfg.grid, GridConfig { horizon: 1.0, h: 1e-3, nu: 20.0 });
        assert_eq!(cfg.mc.n_paths, 10_000);
        // beta = kappa = 2
        assert_eq!((cfg.ergodic.burn_in, cfg.ergodic.horizon), (5.0, 100.0));
        assert_eq!(cfg.ergodic.x_nodes[0].len(), 21);
        assert_eq!(cfg.ergodic.x_nodes[0][0], -4.0);
        assert!(cfg.ergodic.s_nodes.is_none());
        assert_eq!(cfg.converge.functionals, vec!["cos"]);
        assert_eq!(cfg.output.dir, PathBuf::from(DEFAULT_OUT_DIR));
        assert!(cfg.option.is_none());
    }

    #[test]
    fn epsilon_outside_unit_interval_names_the_field() {
        let err = parse("epsilons = [0.5, 1.5]\n[model]\nname = \"ref-ou\"\n").unwrap_err();
        assert!(err.mentions("epsilons[1]"), "{err}");
    }

    #[test]
    fn unknown_model_lists_the_catalog() {
        let err = parse("[model]\nname = \"heston\"\n").unwrap_err();
        assert!(err.mentions("model.name"));
        let msg = err.to_string();
        for name in catalog::SYSTEMS {
            assert!(msg.contains(name), "{msg}");
        }
    }

    #[test]
    fn all_errors_are_collected() {
        let text = r#"
            epsilons = [0.1, 0.2]
            typo = 3
            [model]
            name = "ref-ou"
            params = { kapa = 1.0 }
            [grid]
            h = -1.0
            [mc]
            n_paths = 10
            workerz = 2
        "#;
        let err = parse(text).unwrap_err();
        for field in ["epsilons", "typo", "model.params", "grid.h", "mc.n_paths", "mc.workerz"] {
            assert!(err.mentions(field), "missing {field} in\n{err}");
        }
    }

    #[test]
    fn option_requires_a_cap() {
        let err = parse("[model]\nname = \"lsv-tanh\"\n[option]\nkind = \"european\"\nstrike = 1.0\n").unwrap_err();
        assert!(err.mentions("option.cap"), "{err}");
        let cfg = parse("[model]\nname = \"lsv-tanh\"\n[option]\nstrike = 1.0\ncap = 2.0\n").unwrap();
        let opt = cfg.option.unwrap();
        assert_eq!((opt.kind.as_str(), opt.cap, opt.maturity), ("european", 2.0, 1.0));
        assert_eq!(cfg.ergodic.s_nodes.unwrap().len(), 17);
    }

    #[test]
    fn overrides_beat_file_and_environment() {
        let text = "[model]\nname = \"zero\"\n[mc]\nseed = 5\nn_paths = 200\n[output]\ndir = \"from-file\"\n";
        let cfg = ExperimentConfig::parse(text, &Overrides::default(), Some("from-env")).unwrap();
        assert_eq!(cfg.output.dir, PathBuf::from("from-file"));
        assert_eq!(cfg.mc.seed, 5);
        let ov = Overrides { seed: Some(9), paths: Some(300), workers: Some(2), out: Some("from-flag".into()) };
        let cfg = ExperimentConfig::parse(text, &ov, Some("from-env")).unwrap();
        assert_eq!((cfg.mc.seed, cfg.mc.n_paths, cfg.mc.workers), (9, 300, 2));
        assert_eq!(cfg.output.dir, PathBuf::from("from-flag"));
        let cfg = ExperimentConfig::parse("[model]\nname = \"zero\"\n", &Overrides::default(), Some("from-env")).unwrap();
        assert_eq!(cfg.output.dir, PathBuf::from("from-env"));
        // Overrides are validated like file values.
        let ov = Overrides { paths: Some(5), ..Overrides::default() };
        assert!(ExperimentConfig::parse(text, &ov, None).unwrap_err().mentions("mc.n_paths"));
    }

    #[test]
    fn hash_tracks_every_effective_field() {
        let base = parse("[model]\nname = \"ref-ou\"\n").unwrap();
        assert_eq!(base.hash(), parse("[model]\nname = \"ref-ou\"\nparams = {}\n").unwrap().hash());
        // Spelling out a default does not change the effective config.
        assert_eq!(base.hash(), parse("[model]\nname = \"ref-ou\"\n[grid]\nh = 0.001\n").unwrap().hash());
        let mut changed = base.clone();
        changed.ergodic.x_nodes[0][3] += 1e-9;
        assert_ne!(base.hash(), changed.hash());
        let mut changed = base.clone();
        changed.output.record_wall_ms = true;
        assert_ne!(base.hash(), changed.hash());
    }

    #[test]
    fn effective_config_round_trips() {
        let text = "[model]\nname = \"lsv-tanh\"\nparams = { rho = 0.5 }\n[option]\nkind = \"lookback\"\nstrike = 1.0\ncap = 2.0\ndelta = 0.01\n";
        let cfg = parse(text).unwrap();
        let again = parse(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn custom_payoffs_need_amount_within_cap() {
        let base = "[model]\nname = \"lsv-tanh\"\n[option]\nkind = \"custom-bounded\"\ncap = 1.0\n";
        let err = parse(base).unwrap_err();
        assert!(err.mentions("option.payoff") && err.mentions("option.amount"), "{err}");
        let err = parse(&format!("{base}payoff = \"constant\"\namount = 3.0\n")).unwrap_err();
        assert!(err.mentions("option.amount"));
        assert!(parse(&format!("{base}payoff = \"constant\"\namount = 0.5\n")).is_ok());
    }

    #[test]
    fn malformed_document_is_a_single_error() {
        let err = parse("[model\nname = 1").unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert_eq!(err.0[0].field, "<document>");
    }
}
