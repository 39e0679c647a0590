//! Assets, system states, consequence models and exact risk oracles.

mod cache;
mod consequence;
mod exact;
mod registry;
mod state;

pub use cache::{CacheStats, ConsequenceCache};
pub use consequence::{
    consequence_capacity_drop, consequence_case1, consequence_case2, gray_swan_consequences,
    most_reliable, rank_consequences, Consequence, ConsequenceModel,
};
pub use exact::{
    exact_risk_case1, exact_risk_case2, exact_risk_enumerate, MAX_ENUMERATED_ASSETS, MAX_RELEVANT,
};
pub(crate) use registry::transform_unchecked;
pub use registry::{transform, AssetRegistry, LatentVector};
pub use state::SystemState;
