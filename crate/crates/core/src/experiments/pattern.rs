use serde::Serialize;

use crate::analysis::{draw_symbols, LinkStatistics};
use crate::channel::{synth_los_set, synth_los_ula};
use crate::error::{Error, Result};
use crate::pa::PaModel;
use crate::precoding::{mrt_weights, z3ro_weights, Selection};

/// Line-of-sight angular distortion pattern setup.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternConfig {
    pub antennas: usize,
    /// Radians from broadside.
    pub user_angle: f64,
    pub m_s: usize,
    pub selection: Selection,
    /// Defaults to the cubic polynomial so the pattern is pure third order.
    pub pa: PaModel,
    pub input_power: f64,
    /// In wavelengths.
    pub element_spacing: f64,
    pub ensemble_size: usize,
    pub seed: u64,
}

impl Default for PatternConfig {
    fn default() -> Self {
        Self {
            antennas: 32,
            user_angle: 0.0,
            m_s: 2,
            selection: Selection::default(),
            pa: PaModel::default_polynomial(),
            input_power: crate::from_db(super::config::DEFAULT_BACKOFF_DB),
            element_spacing: 0.5,
            ensemble_size: super::config::DEFAULT_ENSEMBLE_SIZE,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatternPoint {
    pub angle: f64,
    pub mrt_db: f64,
    pub z3ro_db: f64,
}

/// Distortion power radiated towards each angle of `angle_grid` (radians)
/// when a single LOS user sits at `config.user_angle`.
pub fn angular_pattern(config: &PatternConfig, angle_grid: &[f64]) -> Result<Vec<PatternPoint>> {
    if angle_grid.is_empty() {
        return Ok(Vec::new());
    }
    if !(config.input_power > 0.0) {
        return Err(Error::Validation(format!(
            "input power must be positive, got {}",
            config.input_power
        )));
    }
    let user = synth_los_ula(config.antennas, config.user_angle, config.element_spacing, 1.0)?;
    let observers = synth_los_set(config.antennas, angle_grid, config.element_spacing)?;
    let ensemble = draw_symbols(1, config.ensemble_size, &[config.input_power], config.seed)?;

    let users = [user];
    let mrt = mrt_weights(&users)?;
    let z3ro = z3ro_weights(&users, config.m_s, config.selection)?;
    let mrt = LinkStatistics::accumulate(&mrt, &config.pa, &ensemble)?.evaluate(&observers, 0.0)?;
    let z3ro = LinkStatistics::accumulate(&z3ro, &config.pa, &ensemble)?.evaluate(&observers, 0.0)?;

    Ok(angle_grid
        .iter()
        .enumerate()
        .map(|(l, &angle)| PatternPoint {
            angle,
            mrt_db: crate::db(mrt.distortion_var[(l, 0)]),
            z3ro_db: crate::db(z3ro.distortion_var[(l, 0)]),
        })
        .collect())
}
