use super::invariant::{half_outer, symmetrize, time_average};
use super::{psd_sqrt, AveragedModel, ErgodicParams, FrozenEquation, NodeTable};
use crate::engine::{CoefficientField, SlowFastSystem};
use crate::error::{Error, Result, Warning};
use crate::stochastic::{Executor, StreamFamily};

struct NodeResult {
    drift: Vec<f64>,
    sigma: Vec<f64>,
    drift_se: Vec<f64>,
    abar_se: Vec<f64>,
    warnings: Vec<Warning>,
}

/// Averages `drift` and `sigma sigma^T / 2` against the invariant measure
/// of the frozen pair `(fast_drift, fast_diffusion)` at every node of
/// `t_nodes x x_axes`, one trajectory and one stream per node.
#[allow(clippy::too_many_arguments)]
pub(crate) fn tabulate_fields(
    drift: &CoefficientField,
    sigma: &CoefficientField,
    fast_drift: &CoefficientField,
    fast_diffusion: &CoefficientField,
    y_init: &[f64],
    t_nodes: &[f64],
    x_axes: &[Vec<f64>],
    params: &ErgodicParams,
    streams: StreamFamily,
    exec: &Executor,
) -> Result<AveragedModel> {
    let d = x_axes.len();
    let mut skeleton = NodeTable {
        t_nodes: t_nodes.to_vec(),
        x_axes: x_axes.to_vec(),
        drift: vec![],
        sigma: vec![],
        drift_se: vec![],
        abar_se: vec![],
    };
    let n = skeleton.n_nodes();
    // Validate the grid before any simulation.
    AveragedModel::tabulated(NodeTable {
        drift: vec![0.0; n * d],
        sigma: vec![0.0; n * d * d],
        drift_se: vec![0.0; n * d],
        abar_se: vec![0.0; n * d * d],
        ..skeleton.clone()
    })?;
    let results = exec.map(
        n,
        || (),
        |_, k| {
            let (t, x) = skeleton.node(k);
            node_average(drift, sigma, fast_drift, fast_diffusion, y_init, t, &x, params, streams, k)
                .map_err(|e| Error::NodeFailure { t, x, source: Box::new(e) })
        },
    )?;
    let mut nonstationary = 0usize;
    for r in results {
        skeleton.drift.extend(r.drift);
        skeleton.sigma.extend(r.sigma);
        skeleton.drift_se.extend(r.drift_se);
        skeleton.abar_se.extend(r.abar_se);
        nonstationary += usize::from(!r.warnings.is_empty());
    }
    let mut model = AveragedModel::tabulated(skeleton)?;
    let (burn_in, horizon) = params.window(&FrozenEquation::new(
        fast_drift.clone(),
        fast_diffusion.clone(),
        t_nodes[0],
        x_axes.iter().map(|a| a[0]).collect(),
    )?)?;
    model.metadata.insert("burn_in".into(), burn_in.to_string());
    model.metadata.insert("horizon".into(), horizon.to_string());
    model.metadata.insert("step".into(), params.step.to_string());
    model.metadata.insert("nonstationary_nodes".into(), nonstationary.to_string());
    Ok(model)
}

#[allow(clippy::too_many_arguments)]
fn node_average(
    drift: &CoefficientField,
    sigma: &CoefficientField,
    fast_drift: &CoefficientField,
    fast_diffusion: &CoefficientField,
    y_init: &[f64],
    t: f64,
    x: &[f64],
    params: &ErgodicParams,
    streams: StreamFamily,
    k: usize,
) -> Result<NodeResult> {
    let d = x.len();
    let frozen = FrozenEquation::new(fast_drift.clone(), fast_diffusion.clone(), t, x.to_vec())?;
    let mut s = vec![0.0; d * d];
    let avg = time_average(&frozen, y_init, params, streams.stream(k), d + d * d, false, |y, out| {
        drift.eval(t, x, y, &mut out[..d]);
        sigma.eval(t, x, y, &mut s);
        half_outer(&s, d, &mut out[d..]);
    })?;
    let mut abar = avg.mean[d..].to_vec();
    let mut abar_se = avg.std_error[d..].to_vec();
    symmetrize(&mut abar, d);
    symmetrize(&mut abar_se, d);
    Ok(NodeResult {
        drift: avg.mean[..d].to_vec(),
        sigma: psd_sqrt(&abar, d)?,
        drift_se: avg.std_error[..d].to_vec(),
        abar_se,
        warnings: avg.warnings,
    })
}

/// Tabulates `bbar` and `sigmabar = sqrt(2 abar)` of `system` on the node grid.
pub fn tabulate_averaged_model(
    system: &SlowFastSystem,
    t_nodes: &[f64],
    x_axes: &[Vec<f64>],
    params: &ErgodicParams,
    streams: StreamFamily,
    exec: &Executor,
) -> Result<AveragedModel> {
    if x_axes.len() != system.slow_dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} slow axes for a system of slow dimension {}",
            x_axes.len(),
            system.slow_dim()
        )));
    }
    tabulate_fields(
        &system.slow_drift,
        &system.slow_diffusion,
        &system.fast_drift,
        &system.fast_diffusion,
        &system.y0,
        t_nodes,
        x_axes,
        params,
        streams,
        exec,
    )
}
