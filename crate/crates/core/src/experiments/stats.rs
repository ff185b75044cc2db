//! ECDFs and the MRT-vs-Z3RO reduction statistics.

use serde::{Deserialize, Serialize};

use super::report::DistortionReport;
use crate::error::{Error, Result};

/// Upper-tail level used for the "worst case" gap.
pub const TAIL_QUANTILE: f64 = 0.95;

/// Clamped (`-inf`) values enter the gap statistics at this level, so two
/// clamped cells compare as equal instead of producing NaN.
pub const DB_FLOOR: f64 = -300.0;

/// Sorted `(value, cumulative fraction)` steps; the `i`-th value gets `(i+1)/n`.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::Validation("ECDF of an empty sample".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Validation("ECDF input contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / n))
        .collect())
}

/// Inverse ECDF: the smallest sample whose cumulative fraction reaches `q`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Validation(format!("quantile level {q} outside [0, 1]")));
    }
    let steps = ecdf(values)?;
    let n = steps.len();
    let idx = ((q * n as f64).ceil() as usize).clamp(1, n) - 1;
    Ok(steps[idx].0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionMode {
    /// Each user's distortion at its own location.
    AtUser,
    /// Every location of every placement.
    AllLocations,
}

/// How much less distortion Z3RO produces than MRT (positive = Z3RO better).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionStatistics {
    pub mode: ReductionMode,
    pub samples: usize,
    /// Mean of paired dB differences `D_MRT − D_Z3RO`.
    pub mean_db_gap: f64,
    /// `10·log10(mean MRT power / mean Z3RO power)`.
    pub mean_power_db_gap: f64,
    /// Difference of the two ECDFs at [`TAIL_QUANTILE`].
    pub tail_db_gap: f64,
    /// Difference of the two sample maxima.
    pub max_db_gap: f64,
    pub median_mrt_db: f64,
    pub median_z3ro_db: f64,
    pub per_location_gaps: Vec<f64>,
}

/// Distortion values (dB) a report contributes in `mode`.
pub fn report_values(report: &DistortionReport, mode: ReductionMode) -> Vec<f64> {
    match mode {
        ReductionMode::AtUser => report.at_user_distortion_db.clone(),
        ReductionMode::AllLocations => report.distortion_db.iter().copied().collect(),
    }
}

fn collect(reports: &[DistortionReport], mode: ReductionMode) -> Vec<f64> {
    reports
        .iter()
        .flat_map(|r| report_values(r, mode))
        .map(|v| v.max(DB_FLOOR))
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Compares paired MRT / Z3RO reports (same placements, same ensembles).
pub fn reduction_statistics(
    mrt: &[DistortionReport],
    z3ro: &[DistortionReport],
    mode: ReductionMode,
) -> Result<ReductionStatistics> {
    if mrt.len() != z3ro.len() {
        return Err(Error::Validation(format!(
            "{} MRT reports vs {} Z3RO reports",
            mrt.len(),
            z3ro.len()
        )));
    }
    if mrt.is_empty() {
        return Err(Error::Validation("no reports to compare".into()));
    }
    for (i, (a, b)) in mrt.iter().zip(z3ro).enumerate() {
        if a.echo != b.echo {
            return Err(Error::Validation(format!(
                "report pair {i} comes from different scenarios"
            )));
        }
    }
    let mrt_db = collect(mrt, mode);
    let z3ro_db = collect(z3ro, mode);
    let gaps: Vec<f64> = mrt_db.iter().zip(&z3ro_db).map(|(a, b)| a - b).collect();
    let mean_lin = |v: &[f64]| mean(&v.iter().map(|d| crate::from_db(*d)).collect::<Vec<_>>());
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    Ok(ReductionStatistics {
        mode,
        samples: gaps.len(),
        mean_db_gap: mean(&gaps),
        mean_power_db_gap: crate::db(mean_lin(&mrt_db)) - crate::db(mean_lin(&z3ro_db)),
        tail_db_gap: quantile(&mrt_db, TAIL_QUANTILE)? - quantile(&z3ro_db, TAIL_QUANTILE)?,
        max_db_gap: max(&mrt_db) - max(&z3ro_db),
        median_mrt_db: quantile(&mrt_db, 0.5)?,
        median_z3ro_db: quantile(&z3ro_db, 0.5)?,
        per_location_gaps: gaps,
    })
}
