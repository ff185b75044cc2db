use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use crate::analysis::{draw_symbols, rate, BussgangResult, LinkStatistics};
use crate::channel::{ChannelSet, UserChannel};
use crate::error::{Error, Result};
use crate::pa::PaModel;
use crate::precoding::{build_weights, PrecoderKind, PrecoderWeights, Selection};

/// Settings shared by the two reports of a comparison. Two reports can only
/// be compared when their echoes are equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEcho {
    pub user_locations: Vec<usize>,
    pub m_s: usize,
    pub selection: Selection,
    pub pa: PaModel,
    pub backoff_db: f64,
    pub noise_var: f64,
    pub ensemble_size: usize,
    pub ensemble_seed: u64,
}

/// Distortion seen at every location for one precoder and one user placement.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub precoder: PrecoderKind,
    pub bussgang: BussgangResult,
    /// `10·log10 E|d_{l,k}|²`, `L × K`; `-inf` where the estimate was clamped.
    pub distortion_db: Array2<f64>,
    /// Distortion of user `k` at its own location.
    pub at_user_distortion_db: Vec<f64>,
    /// SNDR (SNIDR when `K > 1`) at each user's location, linear.
    pub sndr: Vec<f64>,
    /// `log2(1 + SNDR)` per user.
    pub rate: Vec<f64>,
    pub clamp_count: usize,
    pub echo: ScenarioEcho,
}

impl DistortionReport {
    pub fn user_count(&self) -> usize {
        self.echo.user_locations.len()
    }

    pub(crate) fn from_bussgang(
        precoder: PrecoderKind,
        bussgang: BussgangResult,
        echo: ScenarioEcho,
    ) -> Result<Self> {
        let distortion_db = bussgang.distortion_var.mapv(crate::db);
        let mut at_user = Vec::with_capacity(echo.user_locations.len());
        let mut sndr = Vec::with_capacity(echo.user_locations.len());
        let mut rates = Vec::with_capacity(echo.user_locations.len());
        for (k, &loc) in echo.user_locations.iter().enumerate() {
            at_user.push(distortion_db[(loc, k)]);
            let denom = bussgang.distortion_var[(loc, k)] + bussgang.noise_var;
            // a perfect null with no noise has unbounded SNDR
            let value = if denom == 0.0 {
                f64::INFINITY
            } else {
                bussgang.sndr(loc, k)?
            };
            sndr.push(value);
            rates.push(if value.is_infinite() { f64::INFINITY } else { rate(value)? });
        }
        Ok(Self {
            precoder,
            clamp_count: bussgang.clamp_count(),
            distortion_db,
            at_user_distortion_db: at_user,
            sndr,
            rate: rates,
            bussgang,
            echo,
        })
    }

    /// Same report with a different analytic noise level; the Monte-Carlo
    /// decomposition is reused.
    pub fn with_noise(&self, noise_var: f64) -> Result<Self> {
        let echo = ScenarioEcho {
            noise_var,
            ..self.echo.clone()
        };
        Self::from_bussgang(self.precoder, self.bussgang.with_noise(noise_var), echo)
    }
}

/// Collects the user channels for `user_locations`.
pub fn user_channels(channels: &ChannelSet, user_locations: &[usize]) -> Result<Vec<UserChannel>> {
    user_locations
        .iter()
        .map(|&l| channels.select_user_channel(l))
        .collect()
}

/// Precodes for the users at `user_locations` and decomposes the received
/// signal at every location of `channels`, using the ensemble drawn from
/// `ensemble_seed`.
pub fn evaluate_placement(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    precoder: PrecoderKind,
    user_locations: &[usize],
    ensemble_seed: u64,
) -> Result<DistortionReport> {
    let weights = placement_weights(config, channels, precoder, user_locations)?;
    let k = user_locations.len();
    let budget = config.budget(k)?;
    let ensemble = draw_symbols(k, config.ensemble_size, &budget.per_user_power, ensemble_seed)?;
    let stats = LinkStatistics::accumulate(&weights, &config.pa, &ensemble)?;
    let bussgang = stats.evaluate(channels, config.noise_var)?;
    DistortionReport::from_bussgang(
        precoder,
        bussgang,
        echo(config, user_locations, ensemble_seed),
    )
}

/// Evaluates both precoders on the same ensemble, in `(MRT, Z3RO)` order.
pub fn evaluate_pair(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    user_locations: &[usize],
    ensemble_seed: u64,
) -> Result<(DistortionReport, DistortionReport)> {
    let k = user_locations.len();
    let budget = config.budget(k)?;
    let ensemble = draw_symbols(k, config.ensemble_size, &budget.per_user_power, ensemble_seed)?;
    let run = |kind| -> Result<DistortionReport> {
        let weights = placement_weights(config, channels, kind, user_locations)?;
        let stats = LinkStatistics::accumulate(&weights, &config.pa, &ensemble)?;
        let bussgang = stats.evaluate(channels, config.noise_var)?;
        DistortionReport::from_bussgang(kind, bussgang, echo(config, user_locations, ensemble_seed))
    };
    Ok((run(PrecoderKind::Mrt)?, run(PrecoderKind::Z3ro)?))
}

/// Evaluates the scenario exactly as configured: its precoder, its users.
pub fn evaluate_scenario(config: &ScenarioConfig, channels: &ChannelSet) -> Result<DistortionReport> {
    config.validate_against(channels)?;
    evaluate_placement(
        config,
        channels,
        config.precoder,
        &config.users,
        crate::analysis::derive_seed(config.master_seed, 0),
    )
}

fn placement_weights(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    precoder: PrecoderKind,
    user_locations: &[usize],
) -> Result<PrecoderWeights> {
    if user_locations.is_empty() {
        return Err(Error::Validation("placement needs at least one user".into()));
    }
    let users = user_channels(channels, user_locations)?;
    build_weights(
        precoder,
        &users,
        config.effective_m_s(user_locations.len()),
        config.selection,
    )
}

fn echo(config: &ScenarioConfig, user_locations: &[usize], ensemble_seed: u64) -> ScenarioEcho {
    ScenarioEcho {
        user_locations: user_locations.to_vec(),
        m_s: config.effective_m_s(user_locations.len()),
        selection: config.selection,
        pa: config.pa,
        backoff_db: config.backoff_db,
        noise_var: config.noise_var,
        ensemble_size: config.ensemble_size,
        ensemble_seed,
    }
}
