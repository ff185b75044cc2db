//! Memoryless power amplifier models, applied sample by sample.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default smoothness of the Rapp model.
pub const DEFAULT_RAPP_SMOOTHNESS: f64 = 2.0;
/// Default cubic coefficient of the polynomial surrogate.
pub const DEFAULT_CUBIC_COEFF: f64 = -0.05;

/// Amplifier transfer characteristic. All antennas share one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PaModel {
    /// `y = x / (1 + |x/√p_sat|^{2S})^{1/(2S)}`, no AM/PM.
    Rapp {
        saturation_power: f64,
        smoothness: f64,
    },
    /// `y = a1·x + a3·x·|x|²`.
    Polynomial3 {
        linear_gain: Complex64,
        cubic_coeff: Complex64,
    },
    Ideal,
}

impl PaModel {
    pub fn rapp(saturation_power: f64, smoothness: f64) -> Result<Self> {
        let model = PaModel::Rapp {
            saturation_power,
            smoothness,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn polynomial3(linear_gain: Complex64, cubic_coeff: Complex64) -> Result<Self> {
        let model = PaModel::Polynomial3 {
            linear_gain,
            cubic_coeff,
        };
        model.validate()?;
        Ok(model)
    }

    /// Unit-gain cubic surrogate with the default (small, negative) `a3`.
    pub fn default_polynomial() -> Self {
        PaModel::Polynomial3 {
            linear_gain: Complex64::new(1.0, 0.0),
            cubic_coeff: Complex64::new(DEFAULT_CUBIC_COEFF, 0.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PaModel::Rapp {
                saturation_power,
                smoothness,
            } => {
                if !(saturation_power > 0.0 && saturation_power.is_finite()) {
                    return Err(Error::Validation(format!(
                        "Rapp saturation power must be positive, got {saturation_power}"
                    )));
                }
                if !(smoothness > 0.0 && smoothness.is_finite()) {
                    return Err(Error::Validation(format!(
                        "Rapp smoothness must be positive, got {smoothness}"
                    )));
                }
            }
            PaModel::Polynomial3 {
                linear_gain,
                cubic_coeff,
            } => {
                if linear_gain == Complex64::new(0.0, 0.0) {
                    return Err(Error::Validation("polynomial linear gain must be non-zero".into()));
                }
                if !(linear_gain.is_finite() && cubic_coeff.is_finite()) {
                    return Err(Error::Validation("polynomial coefficients must be finite".into()));
                }
            }
            PaModel::Ideal => {}
        }
        Ok(())
    }

    /// Amplifies one sample. Input is assumed finite; see [`amplify`] for the
    /// checked version.
    #[inline]
    pub fn apply(&self, x: Complex64) -> Complex64 {
        match *self {
            PaModel::Rapp {
                saturation_power,
                smoothness,
            } => {
                let u = x.norm_sqr() / saturation_power;
                let denom = if smoothness == 2.0 {
                    (1.0 + u * u).sqrt().sqrt()
                } else {
                    (1.0 + u.powf(smoothness)).powf(0.5 / smoothness)
                };
                x / denom
            }
            PaModel::Polynomial3 {
                linear_gain,
                cubic_coeff,
            } => x * (linear_gain + cubic_coeff * x.norm_sqr()),
            PaModel::Ideal => x,
        }
    }

    /// Derivative of the characteristic at the origin.
    pub fn small_signal_gain(&self) -> Complex64 {
        match *self {
            PaModel::Rapp { .. } | PaModel::Ideal => Complex64::new(1.0, 0.0),
            PaModel::Polynomial3 { linear_gain, .. } => linear_gain,
        }
    }

    pub fn saturation_power(&self) -> Option<f64> {
        match *self {
            PaModel::Rapp {
                saturation_power, ..
            } => Some(saturation_power),
            _ => None,
        }
    }
}

/// Element-wise amplification of a block of samples.
pub fn amplify(samples: &[Complex64], model: &PaModel) -> Result<Vec<Complex64>> {
    model.validate()?;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if x.is_finite() {
                Ok(model.apply(x))
            } else {
                Err(Error::Validation(format!("non-finite PA input at sample {i}")))
            }
        })
        .collect()
}
