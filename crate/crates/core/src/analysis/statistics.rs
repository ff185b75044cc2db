//! Second-order sufficient statistics of the amplified transmit signal.
//!
//! Every location's Bussgang decomposition only needs `E|r_l|²` and
//! `E[r_l s_k*]`. Both are linear in the amplifier outputs `y`:
//!
//! ```text
//! E|r_l|²     = h_lᵀ · E[y yᴴ] · h_l*
//! E[r_l s_k*] = h_lᵀ · E[y s_k*]
//! ```
//!
//! so one pass over the ensemble accumulating the `M × M` covariance of `y`
//! serves every location, instead of forming the `N × L` received matrix.
//! Partial sums are built per fixed-size block of rows and reduced in block
//! order, which keeps results bit-identical for any thread count.

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rayon::prelude::*;

use super::ensemble::SymbolEnsemble;
use super::estimator::{distortion_from_moments, BussgangResult};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::pa::PaModel;
use crate::precoding::PrecoderWeights;

const BLOCK_ROWS: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkStatistics {
    antennas: usize,
    users: usize,
    samples: usize,
    /// `E[y_a y_b*]`, full Hermitian `M × M`, row-major.
    covariance: Vec<Complex64>,
    /// `E[y_m s_k*]`, `M × K`, row-major.
    cross: Vec<Complex64>,
    symbol_power: Vec<f64>,
}

/// Raw sums for one block of rows; upper triangle only.
struct BlockSums {
    upper: Vec<Complex64>,
    cross: Vec<Complex64>,
}

impl LinkStatistics {
    /// One pass over the ensemble: precode, amplify, accumulate.
    pub fn accumulate(
        weights: &PrecoderWeights,
        model: &PaModel,
        ensemble: &SymbolEnsemble,
    ) -> Result<Self> {
        model.validate()?;
        let (m, k) = (weights.antenna_count(), weights.user_count());
        if ensemble.user_count() != k {
            return Err(Error::Dimension(format!(
                "precoder serves {k} users, ensemble has {}",
                ensemble.user_count()
            )));
        }
        let n = ensemble.size();
        let w: Vec<Complex64> = weights.weights.iter().copied().collect();
        let symbols = ensemble.symbols.as_standard_layout();
        let s = symbols.as_slice().expect("standard layout");

        let blocks: Vec<BlockSums> = s
            .par_chunks(BLOCK_ROWS * k)
            .map(|block| block_sums(block, &w, m, k, model))
            .collect();

        let tri = m * (m + 1) / 2;
        let mut upper = vec![Complex64::new(0.0, 0.0); tri];
        let mut cross = vec![Complex64::new(0.0, 0.0); m * k];
        for b in &blocks {
            upper.iter_mut().zip(&b.upper).for_each(|(acc, v)| *acc += v);
            cross.iter_mut().zip(&b.cross).for_each(|(acc, v)| *acc += v);
        }

        let inv_n = 1.0 / n as f64;
        let mut covariance = vec![Complex64::new(0.0, 0.0); m * m];
        let mut idx = 0;
        for a in 0..m {
            for b in a..m {
                let v = upper[idx] * inv_n;
                covariance[a * m + b] = v;
                covariance[b * m + a] = v.conj();
                idx += 1;
            }
        }
        cross.iter_mut().for_each(|v| *v *= inv_n);

        Ok(Self {
            antennas: m,
            users: k,
            samples: n,
            covariance,
            cross,
            symbol_power: ensemble.empirical_power.clone(),
        })
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// `(E|r|², [E[r s_k*]; K])` for a location with gains `h`.
    pub fn moments(&self, h: ArrayView1<'_, Complex64>) -> (f64, Vec<Complex64>) {
        let m = self.antennas;
        let mut power = 0.0;
        for a in 0..m {
            let row = &self.covariance[a * m..(a + 1) * m];
            let diag = row[a].re * h[a].norm_sqr();
            let off: Complex64 = (a + 1..m).map(|b| row[b] * h[b].conj()).sum();
            power += diag + 2.0 * (h[a] * off).re;
        }
        let corr = (0..self.users)
            .map(|k| (0..m).map(|a| h[a] * self.cross[a * self.users + k]).sum())
            .collect();
        (power, corr)
    }

    /// Cauchy-Schwarz bound `(Σ_a |h_a|·√C_aa)²` on the terms of `E|r|²`.
    fn rounding_scale(&self, h: ArrayView1<'_, Complex64>) -> f64 {
        let m = self.antennas;
        let s: f64 = (0..m)
            .map(|a| h[a].norm() * self.covariance[a * m + a].re.max(0.0).sqrt())
            .sum();
        s * s
    }

    /// Bussgang decomposition at every location of `channels`, for every user.
    pub fn evaluate(&self, channels: &ChannelSet, noise_var: f64) -> Result<BussgangResult> {
        if channels.antenna_count() != self.antennas {
            return Err(Error::Dimension(format!(
                "statistics cover {} antennas, channel set has {}",
                self.antennas,
                channels.antenna_count()
            )));
        }
        if !(noise_var >= 0.0) {
            return Err(Error::Validation(format!("noise variance must be >= 0, got {noise_var}")));
        }
        let (l, k) = (channels.location_count(), self.users);
        let mut result = BussgangResult {
            gain: Array2::zeros((l, k)),
            distortion_var: Array2::zeros((l, k)),
            signal_var: Array2::zeros((l, k)),
            clamped: Array2::from_elem((l, k), false),
            noise_var,
            ensemble_size: self.samples,
        };
        for loc in 0..l {
            let h = channels.location(loc);
            let (power, corr) = self.moments(h);
            let scale = self.rounding_scale(h);
            for user in 0..k {
                let p = self.symbol_power[user];
                let g = corr[user] / p;
                let d = distortion_from_moments(power, g, p, 0.0, self.samples, scale)?;
                result.gain[(loc, user)] = g;
                result.signal_var[(loc, user)] = g.norm_sqr() * p;
                result.distortion_var[(loc, user)] = d.value;
                result.clamped[(loc, user)] = d.clamped;
            }
        }
        Ok(result)
    }
}

fn block_sums(block: &[Complex64], w: &[Complex64], m: usize, k: usize, model: &PaModel) -> BlockSums {
    let rows = block.len() / k;
    // antenna-major split re/im buffers so the pair sums vectorize
    let mut y_re = vec![0.0; m * rows];
    let mut y_im = vec![0.0; m * rows];
    for (i, s_row) in block.chunks_exact(k).enumerate() {
        for ant in 0..m {
            let x: Complex64 = w[ant * k..(ant + 1) * k]
                .iter()
                .zip(s_row)
                .map(|(w, s)| w * s)
                .sum();
            let y = model.apply(x);
            y_re[ant * rows + i] = y.re;
            y_im[ant * rows + i] = y.im;
        }
    }

    let mut upper = Vec::with_capacity(m * (m + 1) / 2);
    for a in 0..m {
        let (ar, ai) = (&y_re[a * rows..(a + 1) * rows], &y_im[a * rows..(a + 1) * rows]);
        for b in a..m {
            let (br, bi) = (&y_re[b * rows..(b + 1) * rows], &y_im[b * rows..(b + 1) * rows]);
            upper.push(dot_conj(ar, ai, br, bi));
        }
    }

    let mut cross = vec![Complex64::new(0.0, 0.0); m * k];
    for user in 0..k {
        let s_re: Vec<f64> = block.iter().skip(user).step_by(k).map(|s| s.re).collect();
        let s_im: Vec<f64> = block.iter().skip(user).step_by(k).map(|s| s.im).collect();
        for ant in 0..m {
            let (yr, yi) = (&y_re[ant * rows..(ant + 1) * rows], &y_im[ant * rows..(ant + 1) * rows]);
            cross[ant * k + user] = dot_conj(yr, yi, &s_re, &s_im);
        }
    }
    BlockSums { upper, cross }
}

/// `Σ_i a_i · conj(b_i)` over split real/imaginary slices.
#[inline]
fn dot_conj(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> Complex64 {
    const LANES: usize = 4;
    let mut acc_re = [0.0; LANES];
    let mut acc_im = [0.0; LANES];
    let chunks = ar
        .chunks_exact(LANES)
        .zip(ai.chunks_exact(LANES))
        .zip(br.chunks_exact(LANES).zip(bi.chunks_exact(LANES)));
    for ((xr, xi), (yr, yi)) in chunks {
        for j in 0..LANES {
            acc_re[j] += xr[j] * yr[j] + xi[j] * yi[j];
            acc_im[j] += xi[j] * yr[j] - xr[j] * yi[j];
        }
    }
    let tail = ar.len() - ar.len() % LANES;
    let mut re = (acc_re[0] + acc_re[1]) + (acc_re[2] + acc_re[3]);
    let mut im = (acc_im[0] + acc_im[1]) + (acc_im[2] + acc_im[3]);
    for i in tail..ar.len() {
        re += ar[i] * br[i] + ai[i] * bi[i];
        im += ai[i] * br[i] - ar[i] * bi[i];
    }
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{bussgang_from_received, draw_symbols, received_noiseless};
    use crate::channel::synth_rayleigh;
    use crate::precoding::{mrt_weights, z3ro_weights, Selection};

    #[test]
    fn dot_conj_matches_naive() {
        let n = 13;
        let ar: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let ai: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos()).collect();
        let br: Vec<f64> = (0..n).map(|i| i as f64 * 0.1 - 0.5).collect();
        let bi: Vec<f64> = (0..n).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let naive: Complex64 = (0..n)
            .map(|i| Complex64::new(ar[i], ai[i]) * Complex64::new(br[i], bi[i]).conj())
            .sum();
        assert!((dot_conj(&ar, &ai, &br, &bi) - naive).norm() < 1e-13);
    }

    #[test]
    fn agrees_with_sample_route() {
        let set = synth_rayleigh(6, 5, 21).unwrap();
        let users = vec![
            set.select_user_channel(1).unwrap(),
            set.select_user_channel(3).unwrap(),
        ];
        let pa = PaModel::rapp(1.0, 2.0).unwrap();
        let e = draw_symbols(2, 5_000, &[0.3, 0.3], 5).unwrap();
        for w in [
            mrt_weights(&users).unwrap(),
            z3ro_weights(&users, 2, Selection::SmallestGains).unwrap(),
        ] {
            let fast = LinkStatistics::accumulate(&w, &pa, &e).unwrap().evaluate(&set, 0.0).unwrap();
            let r = received_noiseless(&set, &w, &pa, &e).unwrap();
            let slow = bussgang_from_received(&r, &e, 0.0).unwrap();
            for (a, b) in fast.gain.iter().zip(&slow.gain) {
                assert!((a - b).norm() < 1e-10 * b.norm().max(1e-3));
            }
            for (a, b) in fast.distortion_var.iter().zip(&slow.distortion_var) {
                assert!((a - b).abs() < 1e-9 * b.max(1e-3), "{a} vs {b}");
            }
        }
    }
}
