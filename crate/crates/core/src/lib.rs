//! Toolkit for studying how stock-return correlations depend on the
//! sampling time scale (the Epps effect).
//!
//! - [`series`]: tick, grid, return and decay-function types; previous-tick
//!   resampling.
//! - [`simulator`]: a random walk observed by two independent Poisson
//!   samplers, and a Monte Carlo check of its closed-form correlation.
//! - [`correlation`]: returns, lagged correlations, decay functions.
//! - [`decomposition`]: prediction of coarse-scale correlations from
//!   short-scale statistics, and the exact model solution.
//! - [`ingest`]: daily pipeline over CSV trade files.

pub mod correlation;
pub mod decomposition;
pub mod error;
pub mod ingest;
pub mod series;
pub mod simulator;

pub use correlation::{
    decay_function, equal_time_rho, fit_exponential_decay, lagged_correlation, measure_epps,
    returns, ExpFit, MomentSet,
};
pub use decomposition::{
    exact_model_rho, exact_ratio, exp_ratio_approx, kernel_sum, minmax_exponential_density,
    predict_rho, DecompositionInput, KernelSums,
};
pub use error::{Error, Result};
pub use ingest::{
    average_stats, daily_pipeline, filter_splits, parse_ticks, truncate_decay, AveragedStats,
    DailyStats, DecayKind, SessionConfig,
};
pub use series::{
    resample_to_grid, CurveKind, DecayFunction, EppsCurve, EppsPoint, PriceScale, RegularSeries,
    ReturnSeries, Tick, TickSeries,
};
pub use simulator::{
    gen_core_walk, gen_poisson_times, overlap_expectation_mc, sample_walk, simulate_pair, CoreWalk,
    McEstimate, ModelParams, SimulatedPair,
};
