//! The studies built on top of the analysis: single- and two-user location
//! scans, noise and back-off sweeps, the LOS angular pattern, and the ECDF
//! statistics used to compare MRT with Z3RO.

mod config;
mod pattern;
mod report;
mod scans;
mod stats;
mod sweep;

pub use config::{linspace, ChannelSource, ScenarioConfig, DATA_ENV, DEFAULT_BACKOFF_DB, DEFAULT_ENSEMBLE_SIZE};
pub use pattern::{angular_pattern, PatternConfig, PatternPoint};
pub use report::{evaluate_pair, evaluate_placement, evaluate_scenario, user_channels, DistortionReport, ScenarioEcho};
pub use scans::{location_pairs, run_placements, scan_statistics, single_user_scan, two_user_scan, Placement};
pub use stats::{ecdf, quantile, reduction_statistics, report_values, ReductionMode, ReductionStatistics, DB_FLOOR, TAIL_QUANTILE};
pub use sweep::{backoff_sweep, linear_snr_numerator, noise_grid_for_snr, noise_sweep, sign_changes, BackoffSweepRow, NoiseSweepRow};
