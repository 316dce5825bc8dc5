//! Shared fixtures for the fuzzy-evolve benchmarks in `benches/`.

use fuzzy_evolve::{bundled, Model, Scenario, Thresholds};

/// A bundled scenario with its pinned master seed.
pub fn scenario(name: &str) -> Scenario {
    bundled::scenario_file(name)
        .and_then(|f| f.to_scenario(0))
        .expect("bundled scenario is valid")
}

/// Example-1 data under every model, HK models at ε = 0.21.
pub fn every_model() -> Vec<Scenario> {
    let base = scenario("example1");
    Model::ALL
        .iter()
        .map(|&m| {
            let eps = m.is_hk().then_some(Thresholds::Homogeneous(0.21));
            base.clone()
                .with_model(m, eps)
                .expect("model applies to example data")
        })
        .collect()
}
