//! The frozen fast equation, its invariant measure and the averaged
//! coefficients built from it.

mod frozen;
mod invariant;
mod model;
mod psd;
mod tabulate;

pub use frozen::{simulate_frozen, verify_contraction, ContractionReport, ContractionRow, FrozenEquation};
pub use invariant::{
    ensemble_averaged_drift, estimate_averaged_diffusion, estimate_averaged_drift, estimate_invariant, AveragedEstimate,
    ErgodicParams, InvariantMeasureEstimate, DEFAULT_BURN_IN_BETAS, DEFAULT_HORIZON_BETAS, QUANTILE_LEVELS,
};
pub use model::{AveragedModel, ModelKind, NodeTable};
pub use psd::{psd_sqrt, PSD_TOLERANCE};
pub use tabulate::tabulate_averaged_model;
pub(crate) use tabulate::tabulate_fields;
