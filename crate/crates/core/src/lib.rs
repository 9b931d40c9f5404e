//! Numerical laboratory for the gatekeeper screening model.
//!
//! * [`signal`]: conditional quality distributions and sampling.
//! * [`solo`]: one candidate facing no gatekeeper or a mechanical one.
//! * [`strategic`]: a gatekeeper that waives its signal with probability `σ`.
//! * [`duel`]: two candidates, a gatekeeper with candidate-specific accuracy,
//!   and tie-breaking (affirmative action) policies.
//! * [`oracle`]: seeded Monte Carlo simulation of both games.

pub mod duel;
pub mod error;
pub mod oracle;
pub mod quadrature;
pub mod signal;
pub mod solo;
pub mod strategic;

pub use duel::{BiasedEquilibrium, BiasedMarket, Candidate, OutcomeDistribution, Side, TiePolicy};
pub use error::{Error, Result};
pub use oracle::{SimConfig, SimReport};
pub use signal::{ModelConfig, SignalModel, State};
pub use solo::{GatekeeperPolicy, SoloMarket, SoloParams};
