//! The averaged equation and weak-convergence experiments.

mod averaged;
mod convergence;
mod functionals;

pub use averaged::{simulate_averaged, AveragedPaths, AveragedSimulator};
pub use convergence::{
    auxiliary_gap, fast_second_moment, weak_convergence_report, ConvergenceCell, ConvergenceReport, ConvergenceSettings,
    AUX_CELL_BASE, L2_CELL_BASE, LIMIT_CELL,
};
pub use functionals::{Evaluation, Functional, FunctionalKind, FUNCTIONALS};
