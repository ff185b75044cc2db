use serde::Serialize;

use super::config::ScenarioConfig;
use super::report::{evaluate_pair, user_channels};
use crate::analysis::derive_seed;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSweepRow {
    pub noise_var: f64,
    /// `p·M·‖h‖²/σ_v²` in dB, from the first user's channel.
    pub snr_db: f64,
    pub rate_mrt: Vec<f64>,
    pub rate_z3ro: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BackoffSweepRow {
    pub backoff_db: f64,
    pub rate_mrt: Vec<f64>,
    pub rate_z3ro: Vec<f64>,
}

/// `p_0 · M · ‖h_0‖²` for the configured users: the linear receive SNR of MRT
/// times `σ_v²`.
pub fn linear_snr_numerator(config: &ScenarioConfig, channels: &ChannelSet) -> Result<f64> {
    config.validate_against(channels)?;
    let users = user_channels(channels, &config.users)?;
    let budget = config.budget(users.len())?;
    Ok(budget.per_user_power[0] * channels.antenna_count() as f64 * users[0].norm_sqr())
}

/// Noise variances that put `p·M·‖h‖²/σ_v²` at each of `snr_db`.
pub fn noise_grid_for_snr(config: &ScenarioConfig, channels: &ChannelSet, snr_db: &[f64]) -> Result<Vec<f64>> {
    let numerator = linear_snr_numerator(config, channels)?;
    Ok(snr_db.iter().map(|x| numerator / crate::from_db(*x)).collect())
}

fn check_grid(grid: &[f64], what: &str, either_direction: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Validation(format!("empty {what} grid")));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("{what} grid has non-finite entries")));
    }
    let ascending = grid.windows(2).all(|w| w[0] <= w[1]);
    let descending = grid.windows(2).all(|w| w[0] >= w[1]);
    if !(ascending || (either_direction && descending)) {
        return Err(Error::Validation(format!("{what} grid must be sorted")));
    }
    Ok(())
}

/// Rates of both precoders over a monotone grid of noise variances at the
/// configured back-off. One Monte-Carlo decomposition serves the whole grid.
pub fn noise_sweep(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    noise_grid: &[f64],
) -> Result<Vec<NoiseSweepRow>> {
    check_grid(noise_grid, "noise", true)?;
    if noise_grid.iter().any(|v| *v <= 0.0) {
        return Err(Error::Validation("noise variances must be positive".into()));
    }
    let numerator = linear_snr_numerator(config, channels)?;
    let seed = derive_seed(config.master_seed, 0);
    let (mrt, z3ro) = evaluate_pair(config, channels, &config.users, seed)?;
    noise_grid
        .iter()
        .map(|&noise_var| {
            Ok(NoiseSweepRow {
                noise_var,
                snr_db: crate::db(numerator / noise_var),
                rate_mrt: mrt.with_noise(noise_var)?.rate,
                rate_z3ro: z3ro.with_noise(noise_var)?.rate,
            })
        })
        .collect()
}

/// Rates of both precoders over a grid of back-offs at the configured noise
/// level. Every point reuses the same ensemble seed.
pub fn backoff_sweep(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    backoff_grid_db: &[f64],
) -> Result<Vec<BackoffSweepRow>> {
    check_grid(backoff_grid_db, "back-off", false)?;
    config.validate_against(channels)?;
    let seed = derive_seed(config.master_seed, 0);
    backoff_grid_db
        .iter()
        .map(|&backoff_db| {
            let point = ScenarioConfig {
                backoff_db,
                ..config.clone()
            };
            let (mrt, z3ro) = evaluate_pair(&point, channels, &config.users, seed)?;
            Ok(BackoffSweepRow {
                backoff_db,
                rate_mrt: mrt.rate,
                rate_z3ro: z3ro.rate,
            })
        })
        .collect()
}

/// Number of strict sign flips along a sequence, ignoring exact zeros.
pub fn sign_changes(values: &[f64]) -> usize {
    let signs: Vec<bool> = values
        .iter()
        .filter(|v| **v != 0.0)
        .map(|v| *v > 0.0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}
