use super::{RngStream, TimeGrid};

/// Role of one stored component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Slow(usize),
    Fast(usize),
    AuxSlow(usize),
    AuxFast(usize),
}

impl Component {
    pub fn label(&self) -> String {
        match self {
            Component::Slow(i) => format!("X{}", i + 1),
            Component::Fast(i) => format!("Y{}", i + 1),
            Component::AuxSlow(i) => format!("Xhat{}", i + 1),
            Component::AuxFast(i) => format!("Yhat{}", i + 1),
        }
    }
}

/// Simulated trajectories on a shared grid.
///
/// Values are stored path-major as `[path][node][component]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBundle {
    grid: TimeGrid,
    components: Vec<Component>,
    values: Vec<f64>,
    streams: Vec<RngStream>,
}

impl PathBundle {
    pub fn new(grid: TimeGrid, components: Vec<Component>, values: Vec<f64>, streams: Vec<RngStream>) -> Self {
        let width = components.len() * grid.n_nodes();
        assert_eq!(values.len(), width * streams.len(), "path bundle shape mismatch");
        Self { grid, components, values, streams }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n_paths(&self) -> usize {
        self.streams.len()
    }

    pub fn width(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn labels(&self) -> Vec<String> {
        self.components.iter().map(Component::label).collect()
    }

    pub fn streams(&self) -> &[RngStream] {
        &self.streams
    }

    pub fn index_of(&self, component: Component) -> Option<usize> {
        self.components.iter().position(|c| *c == component)
    }

    /// Column indices of every component matching `pred`.
    pub fn indices_where(&self, pred: impl Fn(&Component) -> bool) -> Vec<usize> {
        self.components.iter().enumerate().filter(|(_, c)| pred(c)).map(|(i, _)| i).collect()
    }

    pub fn path(&self, p: usize) -> &[f64] {
        let stride = self.width() * self.grid.n_nodes();
        &self.values[p * stride..(p + 1) * stride]
    }

    pub fn value(&self, p: usize, node: usize, column: usize) -> f64 {
        self.path(p)[node * self.width() + column]
    }

    /// Time series of one column along path `p`.
    pub fn series(&self, p: usize, column: usize) -> impl Iterator<Item = f64> + '_ {
        self.path(p).iter().skip(column).step_by(self.width()).copied()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
