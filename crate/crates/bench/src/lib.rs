//! Shared fixtures for the criterion benches.

use brwre_core::{DisplacementModel, EnvironmentModel, OffspringLaw, SimConfig};

pub fn binary_tree() -> EnvironmentModel {
    EnvironmentModel::fixed(OffspringLaw::Deterministic { k: 2 })
}

pub fn poisson_mixture() -> EnvironmentModel {
    EnvironmentModel::new(
        vec![OffspringLaw::Poisson { lambda: 2.0 }, OffspringLaw::Poisson { lambda: 3.0 }],
        vec![0.5, 0.5],
    )
    .expect("valid mixture")
}

pub fn binary_config(n: usize) -> SimConfig {
    SimConfig::new(n, binary_tree(), DisplacementModel::iid(2.0, 1.0).expect("valid model"))
}
