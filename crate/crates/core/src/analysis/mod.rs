//! Microscopic observables, the Dynkin martingale and the mobility algorithms
//! (blocked configurations, mobile-cluster transport paths).

mod dynkin;
mod mobility;
mod observables;

pub use dynkin::{
    dynkin_integrand, dynkin_residual, record_dynkin, DynkinObserver, DynkinRecord,
    IntegrationMode,
};
pub use mobility::{detect_blocked, mobile_cluster_path, MovePlan, Phase, PlannedMove};
pub use observables::{
    box_average, empirical_pairing, instantaneous_current, replacement_box_size,
    restricted_bulk, tau_h, BoxSpec, Side,
};
