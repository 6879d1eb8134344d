//! Slow-fast local stochastic volatility: the model, its risk-neutral
//! form, the averaged local-volatility limit and Monte Carlo pricing.

mod localvol;
mod model;
mod payoff;
mod pricing;

pub use localvol::{averaged_local_vol, LocalVolModel};
pub use model::{girsanov_log_weight, girsanov_weight, girsanov_weights, risk_neutralize, LsvBounds, LsvModel, MeasureChange};
pub use payoff::{CustomPayoff, Mollifier, OptionKind, OptionSpec, WeightFn, OPTION_KINDS, WEIGHT_FUNCTIONS};
pub use pricing::{
    discounted_payoffs, price, price_convergence_experiment, PriceRow, PriceTable, PricingModel, PricingSettings,
};
