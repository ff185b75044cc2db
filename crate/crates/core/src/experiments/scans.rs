use rayon::prelude::*;

use super::config::ScenarioConfig;
use super::report::{evaluate_pair, DistortionReport};
use super::stats::{reduction_statistics, ReductionMode, ReductionStatistics};
use crate::analysis::derive_seed;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};

/// One user placement evaluated with both precoders on a shared ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub user_locations: Vec<usize>,
    pub mrt: DistortionReport,
    pub z3ro: DistortionReport,
}

/// Places a single user at every location in turn.
///
/// Placement `l` draws its ensemble from task seed `l` of the master seed,
/// so the output does not depend on how tasks are scheduled.
pub fn single_user_scan(config: &ScenarioConfig, channels: &ChannelSet) -> Result<Vec<Placement>> {
    config.validate()?;
    let placements: Vec<Vec<usize>> = (0..channels.location_count()).map(|l| vec![l]).collect();
    run_placements(config, channels, placements)
}

/// Every unordered pair of distinct locations, in lexicographic order.
pub fn location_pairs(locations: usize) -> Vec<Vec<usize>> {
    (0..locations)
        .flat_map(|i| (i + 1..locations).map(move |j| vec![i, j]))
        .collect()
}

/// Serves two users at every unordered pair of distinct locations.
pub fn two_user_scan(config: &ScenarioConfig, channels: &ChannelSet) -> Result<Vec<Placement>> {
    config.validate()?;
    if channels.location_count() < 2 {
        return Err(Error::Validation("two-user scan needs at least two locations".into()));
    }
    run_placements(config, channels, location_pairs(channels.location_count()))
}

/// Evaluates explicit placements; each must list distinct locations.
pub fn run_placements(
    config: &ScenarioConfig,
    channels: &ChannelSet,
    placements: Vec<Vec<usize>>,
) -> Result<Vec<Placement>> {
    for users in &placements {
        let mut sorted = users.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!(
                "user locations must be distinct, got {users:?}"
            )));
        }
    }
    placements
        .into_par_iter()
        .enumerate()
        .map(|(task, users)| {
            let seed = derive_seed(config.master_seed, task as u64);
            let (mrt, z3ro) = evaluate_pair(config, channels, &users, seed)?;
            Ok(Placement {
                user_locations: users,
                mrt,
                z3ro,
            })
        })
        .collect()
}

/// At-user and all-location reduction statistics of a scan.
pub fn scan_statistics(
    placements: &[Placement],
) -> Result<(ReductionStatistics, ReductionStatistics)> {
    let mrt: Vec<DistortionReport> = placements.iter().map(|p| p.mrt.clone()).collect();
    let z3ro: Vec<DistortionReport> = placements.iter().map(|p| p.z3ro.clone()).collect();
    Ok((
        reduction_statistics(&mrt, &z3ro, ReductionMode::AtUser)?,
        reduction_statistics(&mrt, &z3ro, ReductionMode::AllLocations)?,
    ))
}
