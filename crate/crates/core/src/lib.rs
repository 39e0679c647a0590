//! Network risk assessment with transitional MCMC.
//!
//! Risk is the expected capacity loss `Σ_s p(s) L(s)` over binary asset
//! failure states. Writing `p(s)` as a standard-normal prior thresholded at
//! `-β` turns that sum into the evidence of the posterior `∝ L · φ`, which
//! [`tmcmc::run_tmcmc`] estimates by tempering. Crude Monte Carlo and a
//! most-probable-states lower bound live in [`baselines`]; [`bench`] runs
//! them side by side under matched budgets.
//!
//! Everything is generic over the scalar via [`Real`]; the `*64` aliases
//! below fix it to `f64`.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod network;
pub mod risk;
pub mod scalar;
pub mod tmcmc;
pub mod validation;

pub use baselines::{run_bound, run_mcs, BudgetMode, BudgetSpec, Method};
pub use error::{Error, Result};
pub use network::{DroppedLink, FlowResult, Link, LoadOptions, Network, NetworkBuilder, NodeId};
pub use risk::{AssetRegistry, Consequence, ConsequenceCache, ConsequenceModel, SystemState};
pub use scalar::Real;
pub use tmcmc::{run_tmcmc, RiskReport, StageDiagnostics, TmcmcConfig};

pub type Network64 = Network<f64>;
pub type NetworkBuilder64 = NetworkBuilder<f64>;
pub type AssetRegistry64 = AssetRegistry<f64>;
pub type ConsequenceModel64 = ConsequenceModel<f64>;
pub type RiskReport64 = RiskReport<f64>;

pub type Network32 = Network<f32>;
pub type AssetRegistry32 = AssetRegistry<f32>;
pub type ConsequenceModel32 = ConsequenceModel<f32>;
pub type RiskReport32 = RiskReport<f32>;
