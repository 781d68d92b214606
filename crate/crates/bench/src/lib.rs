//! Benchmark-only crate; see `benches/pipeline.rs`.

use mdsloc::{sample_connected_network, RefineMode, SampledNetwork, TopologySpec, TrialConfig};

/// The study's default single-trial configuration: 100 random nodes on a
/// 10x10 field, 10 anchors, radio range 2, exact ranging.
pub fn default_trial() -> TrialConfig {
    TrialConfig {
        topology: TopologySpec::random(100, 10.0),
        anchor_count: 10,
        radio_range: 2.0,
        range_error_fraction: 0.0,
        refine_mode: RefineMode::AllHops,
        seed: 7,
    }
}

/// Deterministic connected network shared by all benchmarks.
pub fn fixture() -> SampledNetwork {
    sample_connected_network(&default_trial()).expect("default trial config samples a network")
}
