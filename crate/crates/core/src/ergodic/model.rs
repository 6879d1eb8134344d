use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::engine::{CoefficientField, Shape};
use crate::error::{Error, Result};

/// Node table of an averaged model on the tensor grid `t_nodes x x_axes[0] x ...`.
///
/// Nodes are ordered with `t` slowest and the last slow axis fastest.
/// `drift` holds `d` entries per node, `sigma` and `abar_se` hold `d x d`
/// row-major entries per node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub t_nodes: Vec<f64>,
    pub x_axes: Vec<Vec<f64>>,
    pub drift: Vec<f64>,
    pub sigma: Vec<f64>,
    pub drift_se: Vec<f64>,
    pub abar_se: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    Table(NodeTable),
    /// `drift: (t, x) -> R^d` and `sigma: (t, x) -> R^{d x d}` given as
    /// fields with fast dimension 0.
    ClosedForm { drift: CoefficientField, sigma: CoefficientField },
}

/// Averaged coefficients `(bbar, sigmabar)` of the limit equation
/// `dX = bbar(t, X) dt + sigmabar(t, X) dW`.
///
/// Tabulated models interpolate multilinearly between nodes and clamp to
/// the node hull outside it; [`AveragedModel::eval`] reports whether the
/// query was clamped.
#[derive(Debug, Clone)]
pub struct AveragedModel {
    dim: usize,
    kind: ModelKind,
    pub metadata: BTreeMap<String, String>,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidParameter(format!("{name} has no nodes")));
    }
    if axis.iter().any(|v| !v.is_finite()) || axis.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!("{name} must be finite and strictly increasing")));
    }
    Ok(())
}

impl NodeTable {
    pub fn dim(&self) -> usize {
        self.x_axes.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.t_nodes.len() * self.x_axes.iter().map(Vec::len).product::<usize>()
    }

    /// `(t, x)` of node `index`.
    pub fn node(&self, index: usize) -> (f64, Vec<f64>) {
        let mut rem = index;
        let mut x = vec![0.0; self.dim()];
        for (i, axis) in self.x_axes.iter().enumerate().rev() {
            x[i] = axis[rem % axis.len()];
            rem /= axis.len();
        }
        (self.t_nodes[rem], x)
    }

    fn validate(&self) -> Result<()> {
        check_axis("t_nodes", &self.t_nodes)?;
        if self.x_axes.is_empty() {
            return Err(Error::InvalidParameter("at least one slow axis is required".into()));
        }
        for (i, axis) in self.x_axes.iter().enumerate() {
            check_axis(&format!("x axis {}", i + 1), axis)?;
        }
        let (n, d) = (self.n_nodes(), self.dim());
        for (name, v, per) in
            [("drift", &self.drift, d), ("sigma", &self.sigma, d * d), ("drift_se", &self.drift_se, d), ("abar_se", &self.abar_se, d * d)]
        {
            if v.len() != n * per {
                return Err(Error::DimensionMismatch(format!("{name} has {} entries, expected {}", v.len(), n * per)));
            }
        }
        if self.drift.iter().chain(&self.sigma).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("node values must be finite".into()));
        }
        Ok(())
    }
}

/// Bracketing index and weight of `q` on `axis`; `clamped` when outside.
#[inline]
fn locate(axis: &[f64], q: f64) -> (usize, f64, bool) {
    let n = axis.len();
    if n == 1 {
        return (0, 0.0, q != axis[0]);
    }
    if q <= axis[0] {
        return (0, 0.0, q < axis[0]);
    }
    if q >= axis[n - 1] {
        return (n - 2, 1.0, q > axis[n - 1]);
    }
    let i = axis.partition_point(|v| *v <= q) - 1;
    let i = i.min(n - 2);
    (i, (q - axis[i]) / (axis[i + 1] - axis[i]), false)
}

impl AveragedModel {
    pub fn tabulated(table: NodeTable) -> Result<Self> {
        table.validate()?;
        let mut metadata = BTreeMap::new();
        metadata.insert("sigma_root".into(), "symmetric-psd".into());
        metadata.insert("interpolation".into(), "multilinear, constant extrapolation".into());
        Ok(Self { dim: table.dim(), kind: ModelKind::Table(table), metadata })
    }

    pub fn closed_form(drift: CoefficientField, sigma: CoefficientField) -> Result<Self> {
        let d = drift.slow_dim();
        drift.expect_shape("averaged drift", d, 0, Shape::Vector(d))?;
        sigma.expect_shape("averaged diffusion", d, 0, Shape::Matrix(d, d))?;
        let mut metadata = BTreeMap::new();
        metadata.insert("interpolation".into(), "closed-form".into());
        Ok(Self { dim: d, kind: ModelKind::ClosedForm { drift, sigma }, metadata })
    }

    /// Constant model `bbar = drift`, `sigmabar = sigma`.
    pub fn constant(drift: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        let d = drift.len();
        Self::closed_form(
            CoefficientField::constant("bbar", d, 0, Shape::Vector(d), drift),
            CoefficientField::constant("sigmabar", d, 0, Shape::Matrix(d, d), sigma),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn table(&self) -> Option<&NodeTable> {
        match &self.kind {
            ModelKind::Table(t) => Some(t),
            ModelKind::ClosedForm { .. } => None,
        }
    }

    /// Writes `bbar(t, x)` and `sigmabar(t, x)`; returns `true` if the query
    /// lay outside the node hull and was clamped.
    pub fn eval(&self, t: f64, x: &[f64], drift: &mut [f64], sigma: &mut [f64]) -> bool {
        match &self.kind {
            ModelKind::ClosedForm { drift: b, sigma: s } => {
                b.eval(t, x, &[], drift);
                s.eval(t, x, &[], sigma);
                false
            }
            ModelKind::Table(table) => interpolate(table, t, x, drift, sigma),
        }
    }

    pub fn drift_at(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; self.dim];
        let mut s = vec![0.0; self.dim * self.dim];
        self.eval(t, x, &mut b, &mut s);
        b
    }

    pub fn sigma_at(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; self.dim];
        let mut s = vec![0.0; self.dim * self.dim];
        self.eval(t, x, &mut b, &mut s);
        s
    }

    /// Column names of the node table file.
    pub fn csv_header(d: usize) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((1..=d).map(|i| format!("x_{i}")));
        h.extend((1..=d).map(|i| format!("bbar_{i}")));
        h.extend((1..=d).flat_map(|i| (1..=d).map(move |j| format!("sigmabar_{i}_{j}"))));
        h.extend((1..=d).map(|i| format!("bbar_se_{i}")));
        h.extend((1..=d).flat_map(|i| (1..=d).map(move |j| format!("abar_se_{i}_{j}"))));
        h
    }

    /// One row per node in node order; floats use shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let table = self.table().ok_or(Error::NotTabulated)?;
        let d = self.dim;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::csv_header(d))?;
        for k in 0..table.n_nodes() {
            let (t, x) = table.node(k);
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(f64::to_string));
            row.extend(table.drift[k * d..(k + 1) * d].iter().map(f64::to_string));
            row.extend(table.sigma[k * d * d..(k + 1) * d * d].iter().map(f64::to_string));
            row.extend(table.drift_se[k * d..(k + 1) * d].iter().map(f64::to_string));
            row.extend(table.abar_se[k * d * d..(k + 1) * d * d].iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let d = header.iter().filter(|h| h.starts_with("x_")).count();
        if d == 0 || header != Self::csv_header(d) {
            return Err(Error::Table(format!("unexpected header {header:?}")));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Table(format!("row {}: {e}", i + 1))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let axis = |col: usize| -> Vec<f64> {
            let mut v: Vec<f64> = rows.iter().map(|r| r[col]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let t_nodes = axis(0);
        let x_axes: Vec<Vec<f64>> = (1..=d).map(axis).collect();
        let mut table = NodeTable { t_nodes, x_axes, drift: vec![], sigma: vec![], drift_se: vec![], abar_se: vec![] };
        if table.n_nodes() != rows.len() {
            return Err(Error::Table(format!("{} rows do not form a tensor grid", rows.len())));
        }
        for (k, row) in rows.iter().enumerate() {
            let (t, x) = table.node(k);
            if row[0] != t || row[1..=d] != x[..] {
                return Err(Error::Table(format!("row {} is out of node order", k + 1)));
            }
            let mut c = 1 + d;
            let mut take = |n: usize| {
                let s = row[c..c + n].to_vec();
                c += n;
                s
            };
            table.drift.extend(take(d));
            table.sigma.extend(take(d * d));
            table.drift_se.extend(take(d));
            table.abar_se.extend(take(d * d));
        }
        Self::tabulated(table)
    }
}

fn interpolate(table: &NodeTable, t: f64, x: &[f64], drift: &mut [f64], sigma: &mut [f64]) -> bool {
    let d = table.dim();
    let axes = 1 + d;
    let mut idx = [0usize; 8];
    let mut wts = [0.0f64; 8];
    let mut strides = [0usize; 8];
    let mut lens = [0usize; 8];
    assert!(axes <= 8, "at most 7 slow dimensions are supported");
    let mut clamped = false;
    for a in 0..axes {
        let axis: &[f64] = if a == 0 { &table.t_nodes } else { &table.x_axes[a - 1] };
        let q = if a == 0 { t } else { x[a - 1] };
        let (i, w, c) = locate(axis, q);
        idx[a] = i;
        wts[a] = w;
        lens[a] = axis.len();
        clamped |= c;
    }
    let mut stride = 1;
    for a in (0..axes).rev() {
        strides[a] = stride;
        stride *= lens[a];
    }
    drift.iter_mut().for_each(|v| *v = 0.0);
    sigma.iter_mut().for_each(|v| *v = 0.0);
    for corner in 0..(1usize << axes) {
        let mut weight = 1.0;
        let mut node = 0;
        let mut skip = false;
        for a in 0..axes {
            let upper = corner >> a & 1 == 1;
            let w = if upper { wts[a] } else { 1.0 - wts[a] };
            if w == 0.0 {
                skip = true;
                break;
            }
            weight *= w;
            node += (idx[a] + usize::from(upper)) * strides[a];
        }
        if skip {
            continue;
        }
        for (acc, v) in drift.iter_mut().zip(&table.drift[node * d..(node + 1) * d]) {
            *acc += weight * v;
        }
        for (acc, v) in sigma.iter_mut().zip(&table.sigma[node * d * d..(node + 1) * d * d]) {
            *acc += weight * v;
        }
    }
    clamped
}
