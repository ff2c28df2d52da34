//! Shared fixtures for the benchmark suite.

use pird_core::sweep::{self, SweepSetting};
use pird_core::var::VarModel;

/// Mid-sweep benchmark system: three channels, both redundancy and
/// synergy present, representative of typical workloads.
pub fn benchmark_model() -> VarModel {
    sweep::build_model(SweepSetting::NoInstantaneous, 0.5).expect("d = 0.5 is in range")
}

/// Random stable system with more channels and lags, for scaling runs.
pub fn wide_model() -> VarModel {
    VarModel::random_stable(5, 3, 0.7, 99)
}
