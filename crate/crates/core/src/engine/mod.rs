//! Coefficient fields, the coupled slow-fast system and its integrators.

mod coefficient;
mod diagnostics;
mod simulate;
mod system;

pub use coefficient::{CoefficientField, DeclaredConstants, Shape};
pub use diagnostics::{
    check_constants, check_dissipativity, check_moment_bounds, fast_l2_profile, BoxSampler, DiagnosticCheck,
    DiagnosticsReport,
};
pub(crate) use simulate::{map_paths, map_paths_observed};
pub use simulate::{
    fast_substeps, khasminskii_delta, simulate_auxiliary, simulate_slow_fast, PathRecord, PathSimulator, SimOptions,
    SubstepObserver, DEFAULT_OVERFLOW_GUARD, DEFAULT_SUBSTEPS_PER_EPS,
};
pub use system::{Perturbation, SlowFastSystem};
