//! Partial information rate decomposition for stationary Gaussian processes.
//!
//! Splits the mutual information rate between a target process and a set
//! of source processes into redundant, unique, and synergistic components
//! by minimizing spectral information rates over the redundancy lattice
//! and applying Moebius inversion frequency by frequency.

pub mod engine;
pub mod error;
pub mod ingest;
pub mod lattice;
pub mod linalg;
pub mod lyapunov;
pub mod spectral;
pub mod surrogate;
pub mod sweep;
pub mod var;

pub use engine::{
    conservativeness_check, decompose, profiles_csv, spectral_redundancy, static_decompose,
    static_mi, static_pid, summarize, ConservativenessReport, PirdReport, PirdResult,
    PirdSummary, StaticPid, Units,
};
pub use error::{PirdError, Result};
pub use ingest::{deseasonalize, detrend, load_csv, preprocess, DatasetSpec, PreprocessOptions};
pub use lattice::{precedes, Atom, AtomValues, RedundancyLattice, SourceSet};
pub use spectral::{FrequencyGrid, MirEstimate, SpectralDensity, DEFAULT_GRID_POINTS};
pub use surrogate::{
    distributions_csv, shuffle_surrogate, significance, SignificanceConfig, SignificanceReport,
};
pub use sweep::{
    build_model, default_d_grid, run_sweep, sweep_csv, zero_lag_covariance, EstimateConfig,
    SweepConfig, SweepResult, SweepRow, SweepSetting,
};
pub use var::{TimeSeriesSet, VarModel, DEFAULT_BURN_IN};
