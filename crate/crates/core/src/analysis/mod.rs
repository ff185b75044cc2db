//! Monte-Carlo Bussgang analysis.
//!
//! A Gaussian symbol ensemble is precoded, amplified and projected onto each
//! location's channel. The received signal for user `k` at location `l` is
//! split as `r = G·s_k + d`, with `G = E[r s_k*] / p_k` and `d` uncorrelated
//! with `s_k`. With several users `d` also carries inter-user interference.
//!
//! Thermal noise is not sampled. It is uncorrelated with everything else, so
//! it only shows up as `σ_v²` in the SNDR denominator.

mod ensemble;
mod estimator;
mod statistics;

pub use ensemble::{derive_seed, draw_symbols, SymbolEnsemble, MIN_RECOMMENDED_SIZE};
pub use estimator::{
    bussgang_from_received, bussgang_gain, distortion_from_moments, distortion_variance, rate,
    received_noiseless, sndr, BussgangResult, DistortionEstimate,
};
pub use statistics::LinkStatistics;
