use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rayon::prelude::*;

use super::ensemble::SymbolEnsemble;
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::pa::PaModel;
use crate::precoding::PrecoderWeights;

const ROWS_PER_TASK: usize = 4096;

/// Per-location, per-user Bussgang decomposition of the received signal.
///
/// Noise never enters the samples: `distortion_var` is estimated noiseless
/// and `noise_var` is only added in the SNDR denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct BussgangResult {
    /// `G_{l,k}`, `L × K`.
    pub gain: Array2<Complex64>,
    /// `E|d_{l,k}|²`, clamped at zero.
    pub distortion_var: Array2<f64>,
    /// `|G_{l,k}|² p_k`.
    pub signal_var: Array2<f64>,
    /// Cells whose raw distortion estimate was slightly negative and got clamped.
    pub clamped: Array2<bool>,
    pub noise_var: f64,
    pub ensemble_size: usize,
}

impl BussgangResult {
    pub fn location_count(&self) -> usize {
        self.gain.nrows()
    }

    pub fn user_count(&self) -> usize {
        self.gain.ncols()
    }

    pub fn clamp_count(&self) -> usize {
        self.clamped.iter().filter(|c| **c).count()
    }

    /// SNDR (or SNIDR for several users) of user `k` observed at location `l`.
    pub fn sndr(&self, l: usize, k: usize) -> Result<f64> {
        sndr(
            self.signal_var[(l, k)],
            self.distortion_var[(l, k)],
            self.noise_var,
        )
    }

    /// Same decomposition with a different analytic noise level.
    pub fn with_noise(&self, noise_var: f64) -> Self {
        Self {
            noise_var,
            ..self.clone()
        }
    }
}

fn check_dimensions(
    channels: &ChannelSet,
    weights: &PrecoderWeights,
    ensemble: &SymbolEnsemble,
) -> Result<()> {
    if weights.antenna_count() != channels.antenna_count() {
        return Err(Error::Dimension(format!(
            "precoder has {} antennas, channel set has {}",
            weights.antenna_count(),
            channels.antenna_count()
        )));
    }
    if weights.user_count() != ensemble.user_count() {
        return Err(Error::Dimension(format!(
            "precoder serves {} users, ensemble has {}",
            weights.user_count(),
            ensemble.user_count()
        )));
    }
    Ok(())
}

/// Noiseless received samples `r_{n,l} = Σ_m h̃_{m,l} · PA(Σ_k w_{m,k} s_{n,k})`,
/// returned as an `N × L` matrix.
pub fn received_noiseless(
    channels: &ChannelSet,
    weights: &PrecoderWeights,
    model: &PaModel,
    ensemble: &SymbolEnsemble,
) -> Result<Array2<Complex64>> {
    check_dimensions(channels, weights, ensemble)?;
    model.validate()?;
    let (m, l) = (channels.antenna_count(), channels.location_count());
    let k = weights.user_count();
    let n = ensemble.size();

    // Transposed copies so the inner loops walk contiguous memory.
    let w: Vec<Complex64> = weights.weights.iter().copied().collect(); // [m][k]
    let h: Vec<Complex64> = channels.gains().t().iter().copied().collect(); // [l][m]
    let symbols = ensemble.symbols.as_standard_layout();
    let s = symbols.as_slice().expect("standard layout");

    let mut out = vec![Complex64::new(0.0, 0.0); n * l];
    out.par_chunks_mut(ROWS_PER_TASK * l)
        .zip(s.par_chunks(ROWS_PER_TASK * k))
        .for_each(|(r_block, s_block)| {
            let mut y = vec![Complex64::new(0.0, 0.0); m];
            for (r_row, s_row) in r_block.chunks_exact_mut(l).zip(s_block.chunks_exact(k)) {
                for (ant, y_m) in y.iter_mut().enumerate() {
                    let w_row = &w[ant * k..(ant + 1) * k];
                    let x: Complex64 = w_row.iter().zip(s_row).map(|(w, s)| w * s).sum();
                    *y_m = model.apply(x);
                }
                for (loc, r) in r_row.iter_mut().enumerate() {
                    let h_row = &h[loc * m..(loc + 1) * m];
                    *r = h_row.iter().zip(&y).map(|(h, y)| h * y).sum();
                }
            }
        });
    Array2::from_shape_vec((n, l), out).map_err(|e| Error::Dimension(e.to_string()))
}

/// `G = mean(r · s*) / p`.
pub fn bussgang_gain(
    received: ArrayView1<'_, Complex64>,
    symbols: ArrayView1<'_, Complex64>,
    power: f64,
) -> Result<Complex64> {
    let n = received.len();
    if n == 0 {
        return Err(Error::Validation("empty ensemble".into()));
    }
    if symbols.len() != n {
        return Err(Error::Dimension(format!(
            "{n} received samples but {} symbols",
            symbols.len()
        )));
    }
    if !(power > 0.0) {
        return Err(Error::Validation(format!("symbol power must be positive, got {power}")));
    }
    let corr: Complex64 = received
        .iter()
        .zip(symbols.iter())
        .map(|(r, s)| r * s.conj())
        .sum();
    Ok(corr / (n as f64 * power))
}

/// A distortion variance estimate and whether it had to be clamped to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionEstimate {
    pub value: f64,
    pub clamped: bool,
}

/// Applies `E|d|² = E|r|² − |G|²p − σ²` to already-averaged moments.
///
/// Raw values below `−(10/√N)·|G|²p` mean the gain and the ensemble do not
/// belong together and are reported as an error. `rounding_scale` bounds the
/// magnitude of the terms that were summed into `E|r|²`; a small multiple of
/// it is also tolerated, since near a spatial null the moments are pure
/// rounding noise.
pub fn distortion_from_moments(
    received_power: f64,
    gain: Complex64,
    power: f64,
    noise_var: f64,
    ensemble_size: usize,
    rounding_scale: f64,
) -> Result<DistortionEstimate> {
    let signal = gain.norm_sqr() * power;
    let raw = received_power - signal - noise_var;
    if raw >= 0.0 {
        return Ok(DistortionEstimate {
            value: raw,
            clamped: false,
        });
    }
    let tolerance = 10.0 / (ensemble_size as f64).sqrt() * signal
        + 1e-12 * (rounding_scale.max(received_power) + noise_var);
    if raw < -tolerance {
        return Err(Error::Inconsistent(format!(
            "distortion estimate {raw:e} is below the Monte-Carlo tolerance -{tolerance:e}"
        )));
    }
    Ok(DistortionEstimate {
        value: 0.0,
        clamped: true,
    })
}

/// Sample distortion variance of one received stream given its Bussgang gain.
pub fn distortion_variance(
    received: ArrayView1<'_, Complex64>,
    gain: Complex64,
    power: f64,
    noise_var: f64,
) -> Result<DistortionEstimate> {
    let n = received.len();
    if n == 0 {
        return Err(Error::Validation("empty ensemble".into()));
    }
    if noise_var < 0.0 {
        return Err(Error::Validation(format!("noise variance must be >= 0, got {noise_var}")));
    }
    let received_power = received.iter().map(|r| r.norm_sqr()).sum::<f64>() / n as f64;
    distortion_from_moments(received_power, gain, power, noise_var, n, received_power)
}

/// Bussgang decomposition straight from received samples (`N × L`).
///
/// Gains are normalized by the ensemble's empirical symbol power, which makes
/// the residual exactly orthogonal to the symbols over the sample.
pub fn bussgang_from_received(
    received: &Array2<Complex64>,
    ensemble: &SymbolEnsemble,
    noise_var: f64,
) -> Result<BussgangResult> {
    if received.nrows() != ensemble.size() {
        return Err(Error::Dimension(format!(
            "{} received rows for an ensemble of {}",
            received.nrows(),
            ensemble.size()
        )));
    }
    let (l, k) = (received.ncols(), ensemble.user_count());
    let mut result = BussgangResult {
        gain: Array2::zeros((l, k)),
        distortion_var: Array2::zeros((l, k)),
        signal_var: Array2::zeros((l, k)),
        clamped: Array2::from_elem((l, k), false),
        noise_var,
        ensemble_size: ensemble.size(),
    };
    for loc in 0..l {
        let r = received.column(loc);
        for user in 0..k {
            let p = ensemble.empirical_power[user];
            let g = bussgang_gain(r, ensemble.symbols.column(user), p)?;
            let d = distortion_variance(r, g, p, 0.0)?;
            result.gain[(loc, user)] = g;
            result.signal_var[(loc, user)] = g.norm_sqr() * p;
            result.distortion_var[(loc, user)] = d.value;
            result.clamped[(loc, user)] = d.clamped;
        }
    }
    Ok(result)
}

/// `signal / (distortion + noise)`, linear.
pub fn sndr(signal_var: f64, distortion_var: f64, noise_var: f64) -> Result<f64> {
    if noise_var < 0.0 || distortion_var < 0.0 || signal_var < 0.0 {
        return Err(Error::Validation(format!(
            "variances must be non-negative: signal {signal_var}, distortion {distortion_var}, noise {noise_var}"
        )));
    }
    let denom = distortion_var + noise_var;
    if denom == 0.0 {
        return Err(Error::Singularity(
            "SNDR undefined with zero distortion and zero noise".into(),
        ));
    }
    Ok(signal_var / denom)
}

/// Gaussian-distortion lower bound on the rate, `log2(1 + SNDR)` bits/symbol.
pub fn rate(sndr_linear: f64) -> Result<f64> {
    if !(sndr_linear >= 0.0) {
        return Err(Error::Validation(format!("SNDR must be >= 0, got {sndr_linear}")));
    }
    Ok((1.0 + sndr_linear).log2())
}
