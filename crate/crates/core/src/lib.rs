//! Stochastic simulation of citation accumulation over a fixed cohort of
//! papers under two-mechanism kernels: a static *direct* weight (uniform,
//! constant, team-size based, or drawn from a power law) plus an *indirect*
//! cumulative-advantage weight that grows with citations received.
//!
//! The crate is organised bottom-up:
//!
//! * [`population`]: team sizes and intrinsic direct weights
//! * [`sampler`]: Fenwick-tree weighted sampling with O(log n) updates
//! * [`kernels`]: the kernel family and per-citation attribution
//! * [`engine`]: the event loop, checkpoints and seeded ensembles
//! * [`stats`]: histograms, log binning, distances, share analyses
//! * [`fit`]: grid-search calibration
//! * [`io`]: CSV and JSON formats

pub mod dist;
pub mod engine;
pub mod error;
pub mod fit;
pub mod io;
pub mod kernels;
pub mod population;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use engine::{
    expected_direct_count, expected_direct_fraction, run, run_ensemble, Checkpoint, PeriodTally, RunMetadata,
    RunResult, SimulationConfig, Snapshot,
};
pub use error::{Error, Result};
pub use fit::{grid_fit, objective, FitResult, GridAxis, Param, ParamGrid};
pub use kernels::{InfluenceDistribution, InfluenceSpec, InfluenceWeight, Kernel, KernelMode, KernelSpec, PaperState};
pub use population::{
    gen_team_sizes, intrinsic_weight, load_team_sizes, team_size_histogram, DirectTransform, TeamGenParams,
    TeamSizeVector, TransformKind,
};
pub use sampler::{oracle_sample, WeightIndex};
pub use stats::{BinnedDistribution, BinningScheme, Histogram};
