use ndarray::Array2;
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Ensembles smaller than this trigger a warning; the Monte-Carlo floor gets
/// too close to typical distortion levels.
pub const MIN_RECOMMENDED_SIZE: usize = 10_000;

/// `N × K` matrix of independent `CN(0, p_k)` symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolEnsemble {
    pub symbols: Array2<Complex64>,
    /// Nominal variances `p_k` the symbols were drawn with.
    pub per_user_power: Vec<f64>,
    /// Sample mean of `|s_k|²` over the ensemble.
    pub empirical_power: Vec<f64>,
    pub seed: u64,
}

impl SymbolEnsemble {
    pub fn size(&self) -> usize {
        self.symbols.nrows()
    }

    pub fn user_count(&self) -> usize {
        self.symbols.ncols()
    }
}

/// Draws `n` rows of `k` independent circularly-symmetric Gaussian symbols.
pub fn draw_symbols(k: usize, n: usize, powers: &[f64], seed: u64) -> Result<SymbolEnsemble> {
    if k == 0 || n == 0 {
        return Err(Error::Validation(format!(
            "ensemble needs K >= 1 and N >= 1, got K={k} N={n}"
        )));
    }
    if powers.len() != k {
        return Err(Error::Dimension(format!("{} powers for {k} users", powers.len())));
    }
    if let Some(p) = powers.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
        return Err(Error::Validation(format!("symbol power must be positive, got {p}")));
    }
    if n < MIN_RECOMMENDED_SIZE {
        log::warn!("ensemble size {n} is below {MIN_RECOMMENDED_SIZE}; estimates will be noisy");
    }

    let scales: Vec<f64> = powers.iter().map(|p| (p / 2.0).sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut symbols = Array2::zeros((n, k));
    for row in symbols.rows_mut() {
        for (s, scale) in row.into_iter().zip(&scales) {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *s = Complex64::new(re * scale, im * scale);
        }
    }
    let empirical_power = symbols
        .columns()
        .into_iter()
        .map(|col| col.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64)
        .collect();

    Ok(SymbolEnsemble {
        symbols,
        per_user_power: powers.to_vec(),
        empirical_power,
        seed,
    })
}

/// Seed for task `task` of a run with `master` seed. Each task reads its own
/// ChaCha stream, so results do not depend on scheduling.
pub fn derive_seed(master: u64, task: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(task);
    rng.next_u64()
}
