use super::{LsvModel, MeasureChange};
use crate::engine::{CoefficientField, Shape};
use crate::ergodic::{tabulate_fields, AveragedModel, ErgodicParams, ModelKind, NodeTable};
use crate::error::{Error, Result};
use crate::stochastic::{Executor, StreamFamily};

/// Averaged local-volatility limit `dS = Rbar(t, S) S dt + Fbar(t, S) S dW`.
///
/// Stored as an [`AveragedModel`] over `(t, s)` whose drift column holds
/// `Rbar` and whose diffusion column holds `Fbar`.
#[derive(Debug, Clone)]
pub struct LocalVolModel {
    pub model: AveragedModel,
    pub s0: f64,
    pub horizon: f64,
}

impl LocalVolModel {
    /// Constant rate and volatility (Black-Scholes).
    pub fn constant(rate: f64, vol: f64, s0: f64, horizon: f64) -> Result<Self> {
        Ok(Self { model: AveragedModel::constant(vec![rate], vec![vol])?, s0, horizon })
    }

    /// `(Rbar, Fbar)` at `(t, s)` and whether the query was clamped.
    #[inline]
    pub fn eval(&self, t: f64, s: f64) -> (f64, f64, bool) {
        let (mut r, mut f) = ([0.0], [0.0]);
        let clamped = self.model.eval(t, &[s], &mut r, &mut f);
        (r[0], f[0], clamped)
    }
}

/// Tabulates `Rbar = int r dmu` and `Fbar = sqrt(int F^2 dmu)` on
/// `t_nodes x s_nodes`, averaging against the invariant measure of the
/// unperturbed fast pair frozen at `x = ln s`.
#[allow(clippy::too_many_arguments)]
pub fn averaged_local_vol(
    lsv: &LsvModel,
    mc: &MeasureChange,
    t_nodes: &[f64],
    s_nodes: &[f64],
    params: &ErgodicParams,
    streams: StreamFamily,
    exec: &Executor,
) -> Result<LocalVolModel> {
    if s_nodes.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParameter("price nodes must be positive".into()));
    }
    let vol = lsv.vol.clone();
    let sigma = CoefficientField::new("F", 1, 1, Shape::Matrix(1, 1), move |t, x, y, out| vol.eval(t, x, y, out));
    let x_axis: Vec<f64> = s_nodes.iter().map(|s| s.ln()).collect();
    let log_model = tabulate_fields(
        &mc.short_rate,
        &sigma,
        &lsv.fast_drift,
        &lsv.fast_diffusion,
        &[lsv.y0],
        t_nodes,
        &[x_axis],
        params,
        streams,
        exec,
    )?;
    let ModelKind::Table(table) = log_model.kind() else { unreachable!("tabulation yields a table") };
    let price_table = NodeTable { x_axes: vec![s_nodes.to_vec()], ..table.clone() };
    let mut model = AveragedModel::tabulated(price_table)?;
    model.metadata = log_model.metadata.clone();
    model.metadata.insert("coordinates".into(), "price; drift column Rbar, diffusion column Fbar".into());
    Ok(LocalVolModel { model, s0: lsv.s0, horizon: lsv.horizon })
}
