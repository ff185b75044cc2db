//! Link-level simulation of massive MIMO downlink precoding under nonlinear
//! power amplifiers.
//!
//! The crate compares maximum ratio transmission (MRT) with the zero
//! third-order (Z3RO) precoder. Z3RO drives a few antennas with a sign-inverted,
//! boosted copy of the signal so that the third-order intermodulation product
//! cancels at the intended user. Both precoders are run through a memoryless
//! amplifier model and the received signal is split, at every location of a
//! channel set, into a Bussgang gain and an uncorrelated distortion term.
//!
//! Module map:
//!
//! * [`channel`]: measured and synthetic channel sets.
//! * [`precoding`]: MRT / Z3RO weights and the transmit power budget.
//! * [`pa`]: Rapp, cubic polynomial and ideal amplifier models.
//! * [`analysis`]: Monte-Carlo Bussgang estimation, SNDR and rate.
//! * [`experiments`]: location scans, sweeps, angular pattern, ECDF statistics.
//! * [`cli`]: config parsing and the `scan` / `sweep` / `pattern` commands.

pub mod analysis;
pub mod channel;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod pa;
pub mod precoding;

pub use num_complex::Complex64;

pub use error::{Error, Result};

/// `10·log10(x)`; zero maps to negative infinity.
pub fn db(power_ratio: f64) -> f64 {
    10.0 * power_ratio.log10()
}

/// Inverse of [`db`].
pub fn from_db(value_db: f64) -> f64 {
    10f64.powf(value_db / 10.0)
}
