//! MRT and Z3RO precoders and the transmit power budget.
//!
//! Both precoders normalize each user's weight column to `Σ_m |w_{m,k}|² = M`,
//! so the average power at each amplifier input equals `p_in = Σ_k p_k`.
//!
//! Z3RO picks `M_s` "saturated" antennas per user, flips their sign and boosts
//! them by `γ_k` so that the third-order term `Σ_m h_m w_m |w_m|²` vanishes:
//!
//! ```text
//! γ_k = (Σ_{m∉S} |h_m|⁴ / Σ_{m∈S} |h_m|⁴)^{1/3}
//! w_m = α_k h_m* · (−γ_k if m ∈ S else 1)
//! ```

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_rows_csv, UserChannel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecoderKind {
    Mrt,
    Z3ro,
}

impl fmt::Display for PrecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecoderKind::Mrt => "mrt",
            PrecoderKind::Z3ro => "z3ro",
        })
    }
}

impl FromStr for PrecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mrt" => Ok(PrecoderKind::Mrt),
            "z3ro" => Ok(PrecoderKind::Z3ro),
            other => Err(Error::Validation(format!("unknown precoder `{other}`"))),
        }
    }
}

/// How Z3RO picks its saturated antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Antennas `0..M_s`.
    #[serde(rename = "first")]
    FirstIndices,
    /// The `M_s` antennas with the weakest gains; ties go to the lower index.
    #[default]
    #[serde(rename = "smallest")]
    SmallestGains,
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selection::FirstIndices => "first",
            Selection::SmallestGains => "smallest",
        })
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "first" | "first_indices" => Ok(Selection::FirstIndices),
            "smallest" | "smallest_gains" => Ok(Selection::SmallestGains),
            other => Err(Error::Validation(format!("unknown selection mode `{other}`"))),
        }
    }
}

/// `M × K` weight matrix plus the per-user normalization bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderWeights {
    pub weights: Array2<Complex64>,
    pub per_user_alpha: Vec<f64>,
    /// `γ_k` per user; empty for MRT.
    pub per_user_gamma: Vec<f64>,
    /// Saturated antenna indices per user, ascending; empty for MRT.
    pub saturated_sets: Vec<Vec<usize>>,
    pub kind: PrecoderKind,
}

impl PrecoderWeights {
    pub fn antenna_count(&self) -> usize {
        self.weights.nrows()
    }

    pub fn user_count(&self) -> usize {
        self.weights.ncols()
    }

    /// Column `k` as a vector.
    pub fn user_weights(&self, k: usize) -> Vec<Complex64> {
        self.weights.column(k).to_vec()
    }

    /// Debug export using the channel file's `re,im` pairing (antennas as rows).
    pub fn to_csv(&self) -> String {
        let (m, k) = self.weights.dim();
        format!("# M={m} K={k}\n{}", complex_rows_csv(&self.weights))
    }
}

fn check_channels(channels: &[UserChannel]) -> Result<usize> {
    let first = channels
        .first()
        .ok_or_else(|| Error::Validation("at least one user channel is required".into()))?;
    let m = first.antenna_count();
    for (k, ch) in channels.iter().enumerate() {
        if ch.antenna_count() != m {
            return Err(Error::Dimension(format!(
                "user {k} has {} antennas, user 0 has {m}",
                ch.antenna_count()
            )));
        }
        if ch.norm_sqr() == 0.0 {
            return Err(Error::Validation(format!("user {k} has a zero-norm channel")));
        }
    }
    Ok(m)
}

/// Maximum ratio transmission: `w_{m,k} = α_k h*_{m,k}`,
/// `α_k = sqrt(M / Σ_m |h_{m,k}|²)`.
pub fn mrt_weights(channels: &[UserChannel]) -> Result<PrecoderWeights> {
    let m = check_channels(channels)?;
    let mut weights = Array2::zeros((m, channels.len()));
    let mut alphas = Vec::with_capacity(channels.len());
    for (k, ch) in channels.iter().enumerate() {
        let alpha = (m as f64 / ch.norm_sqr()).sqrt();
        for (w, h) in weights.column_mut(k).iter_mut().zip(&ch.gains) {
            *w = h.conj() * alpha;
        }
        alphas.push(alpha);
    }
    Ok(PrecoderWeights {
        weights,
        per_user_alpha: alphas,
        per_user_gamma: Vec::new(),
        saturated_sets: vec![Vec::new(); channels.len()],
        kind: PrecoderKind::Mrt,
    })
}

/// Saturated antenna set for one user, sorted ascending.
pub fn saturated_set(gains: &[Complex64], m_s: usize, selection: Selection) -> Vec<usize> {
    match selection {
        Selection::FirstIndices => (0..m_s).collect(),
        Selection::SmallestGains => {
            let mut order: Vec<usize> = (0..gains.len()).collect();
            // sort_by is stable, so equal gains keep index order
            order.sort_by(|&a, &b| gains[a].norm_sqr().total_cmp(&gains[b].norm_sqr()));
            let mut set = order[..m_s].to_vec();
            set.sort_unstable();
            set
        }
    }
}

/// Zero third-order precoder, built independently for each user.
pub fn z3ro_weights(
    channels: &[UserChannel],
    m_s: usize,
    selection: Selection,
) -> Result<PrecoderWeights> {
    let m = check_channels(channels)?;
    if m_s == 0 || m_s >= m {
        return Err(Error::Validation(format!(
            "saturated antenna count must satisfy 1 <= M_s < M, got M_s={m_s}, M={m}"
        )));
    }
    let k_count = channels.len();
    let mut weights = Array2::zeros((m, k_count));
    let mut alphas = Vec::with_capacity(k_count);
    let mut gammas = Vec::with_capacity(k_count);
    let mut sets = Vec::with_capacity(k_count);

    for (k, ch) in channels.iter().enumerate() {
        let set = saturated_set(&ch.gains, m_s, selection);
        let mut in_set = vec![false; m];
        for &i in &set {
            in_set[i] = true;
        }

        let (mut quartic_sat, mut quartic_rest) = (0.0, 0.0);
        let (mut power_sat, mut power_rest) = (0.0, 0.0);
        for (h, &sat) in ch.gains.iter().zip(&in_set) {
            let p = h.norm_sqr();
            if sat {
                quartic_sat += p * p;
                power_sat += p;
            } else {
                quartic_rest += p * p;
                power_rest += p;
            }
        }
        if quartic_sat == 0.0 {
            return Err(Error::Singularity(format!(
                "user {k}: saturated antennas {set:?} all have zero gain"
            )));
        }
        let gamma = (quartic_rest / quartic_sat).cbrt();
        let denom = power_rest + gamma * gamma * power_sat;
        if denom == 0.0 {
            return Err(Error::Singularity(format!(
                "user {k}: precoder has zero power before normalization"
            )));
        }
        let alpha = (m as f64).sqrt() / denom.sqrt();

        for ((w, h), &sat) in weights.column_mut(k).iter_mut().zip(&ch.gains).zip(&in_set) {
            let scale = if sat { -gamma } else { 1.0 };
            *w = h.conj() * (alpha * scale);
        }
        alphas.push(alpha);
        gammas.push(gamma);
        sets.push(set);
    }

    Ok(PrecoderWeights {
        weights,
        per_user_alpha: alphas,
        per_user_gamma: gammas,
        saturated_sets: sets,
        kind: PrecoderKind::Z3ro,
    })
}

/// Builds either precoder; `m_s` and `selection` only matter for Z3RO.
pub fn build_weights(
    kind: PrecoderKind,
    channels: &[UserChannel],
    m_s: usize,
    selection: Selection,
) -> Result<PrecoderWeights> {
    match kind {
        PrecoderKind::Mrt => mrt_weights(channels),
        PrecoderKind::Z3ro => z3ro_weights(channels, m_s, selection),
    }
}

/// Third-order beamformed sum `Σ_m h_m w_m |w_m|²` and the sum of its term
/// magnitudes (the natural scale for a relative null check).
pub fn third_order_sum(channel: &[Complex64], weights: &[Complex64]) -> (Complex64, f64) {
    channel
        .iter()
        .zip(weights)
        .fold((Complex64::new(0.0, 0.0), 0.0), |(sum, mag), (h, w)| {
            let term = h * w * w.norm_sqr();
            (sum + term, mag + term.norm())
        })
}

/// `x = S·Wᵀ`: row `n`, column `m` is `Σ_k w_{m,k} s_{n,k}`.
pub fn precode_symbols(
    weights: &PrecoderWeights,
    symbols: &Array2<Complex64>,
) -> Result<Array2<Complex64>> {
    if symbols.ncols() != weights.user_count() {
        return Err(Error::Dimension(format!(
            "symbols have {} columns, precoder serves {} users",
            symbols.ncols(),
            weights.user_count()
        )));
    }
    Ok(symbols.dot(&weights.weights.t()))
}

/// Per-user powers `p_k` and the amplifier saturation power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub per_user_power: Vec<f64>,
    pub saturation_power: f64,
}

impl PowerBudget {
    pub fn new(per_user_power: Vec<f64>, saturation_power: f64) -> Result<Self> {
        if per_user_power.is_empty() {
            return Err(Error::Validation("power budget needs at least one user".into()));
        }
        if per_user_power.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::Validation(format!(
                "per-user powers must be positive and finite, got {per_user_power:?}"
            )));
        }
        if !(saturation_power > 0.0 && saturation_power.is_finite()) {
            return Err(Error::Validation(format!(
                "saturation power must be positive, got {saturation_power}"
            )));
        }
        Ok(Self {
            per_user_power,
            saturation_power,
        })
    }

    /// Equal split of `p_in = p_sat · 10^{backoff/10}` over `users`.
    pub fn from_backoff_db(backoff_db: f64, saturation_power: f64, users: usize) -> Result<Self> {
        if users == 0 {
            return Err(Error::Validation("power budget needs at least one user".into()));
        }
        if !backoff_db.is_finite() {
            return Err(Error::Validation(format!("back-off must be finite, got {backoff_db}")));
        }
        let p_in = saturation_power * crate::from_db(backoff_db);
        Self::new(vec![p_in / users as f64; users], saturation_power)
    }

    /// `p_in = Σ_k p_k`, the average power at each amplifier input.
    pub fn total_input_power(&self) -> f64 {
        self.per_user_power.iter().sum()
    }

    /// `p_T = M · p_in`.
    pub fn total_transmit_power(&self, antennas: usize) -> f64 {
        antennas as f64 * self.total_input_power()
    }

    pub fn backoff_ratio(&self) -> f64 {
        self.total_input_power() / self.saturation_power
    }

    pub fn backoff_db(&self) -> f64 {
        crate::db(self.backoff_ratio())
    }
}

/// Rescales `x` so that its empirical per-antenna power equals `p_in`.
pub fn scale_to_backoff(x: &Array2<Complex64>, budget: &PowerBudget) -> Result<Array2<Complex64>> {
    if x.is_empty() {
        return Err(Error::Validation("cannot scale an empty signal block".into()));
    }
    let measured = x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64;
    if measured == 0.0 {
        return Err(Error::Validation("input block has zero power".into()));
    }
    let scale = (budget.total_input_power() / measured).sqrt();
    Ok(x.mapv(|v| v * scale))
}
